#include "epicohort/generation.hpp"

#include "epicohort/prompts.hpp"
#include "epicohort/sql_analyzer.hpp"
#include "epicohort/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace epicohort {

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::ZS: return "zs";
        case Strategy::RAG_A: return "rag_a";
        case Strategy::RAG_C: return "rag_c";
        case Strategy::RAG_AC: return "rag_ac";
    }
    return "zs";
}

std::string_view strategy_label(Strategy s) {
    switch (s) {
        case Strategy::ZS: return "ZS";
        case Strategy::RAG_A: return "RAG+A";
        case Strategy::RAG_C: return "RAG+C";
        case Strategy::RAG_AC: return "RAG+A+C";
    }
    return "ZS";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
    const auto t = text::trim(s);
    for (Strategy st : kAllStrategies) {
        if (text::iequals(t, strategy_name(st)) || text::iequals(t, strategy_label(st))) return st;
    }
    return std::nullopt;
}

bool uses_ask(Strategy s) { return s == Strategy::RAG_A || s == Strategy::RAG_AC; }
bool uses_coho(Strategy s) { return s == Strategy::RAG_C || s == Strategy::RAG_AC; }

std::size_t PromptBundle::char_count() const {
    std::size_t n = 0;
    for (const auto& m : messages) n += m.text.size();
    return n;
}

std::string masked_criteria_text(const CohortCriteria& c) {
    CohortCriteria masked = c;
    for (auto* list : {&masked.inclusion, &masked.exclusion}) {
        for (auto& cr : *list) {
            cr.text = mask_entities(cr.text, cr.entities);
            cr.entities.clear();
        }
    }
    return serialize_criteria(masked);
}

namespace {

bool by_score(const Exemplar& a, const Exemplar& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entry_id < b.entry_id;
}

std::string render_example(const std::string& label, const std::string& body, const std::string& sql) {
    return label + "\n" + std::string(text::trim(body)) + "\nSQL:\n```sql\n" +
           std::string(text::trim(sql)) + "\n```\n\n";
}

std::string system_message(const PromptOptions& options) {
    return text::render_template(prompts::get("sql_system").body, {{"dialect", options.dialect}});
}

std::vector<Message> render_cohort_messages(const CohortCriteria& criteria, const std::vector<Exemplar>& exemplars,
                                            const PromptOptions& options) {
    std::vector<Exemplar> coho, ask;
    for (const auto& e : exemplars) (e.source == KBKind::Coho ? coho : ask).push_back(e);
    std::sort(coho.begin(), coho.end(), by_score);

    std::string cohort_examples;
    if (!coho.empty()) {
        cohort_examples = "## Similar cohort definitions\n\n";
        for (std::size_t i = 0; i < coho.size(); ++i) {
            cohort_examples += render_example("Cohort example " + std::to_string(i + 1) + ":\nCriteria:",
                                              std::string(text::trim(coho[i].text)), coho[i].sql);
        }
    }

    std::string criteria_examples;
    if (!ask.empty()) {
        criteria_examples = "## Similar analytical questions per criterion\n\n";
        for (const auto* list : {&criteria.inclusion, &criteria.exclusion}) {
            for (const auto& cr : *list) {
                std::vector<Exemplar> group;
                for (const auto& e : ask) {
                    if (e.criterion_id == cr.id) group.push_back(e);
                }
                if (group.empty()) continue;
                std::sort(group.begin(), group.end(), by_score);
                criteria_examples += "### For criterion " + cr.id + " (" + cr.text + ")\n\n";
                for (const auto& e : group) {
                    criteria_examples += render_example("Question:", e.text, e.sql);
                }
            }
        }
    }

    const auto user = text::render_template(prompts::get("cohort_sql").body,
                                            {{"criteria", serialize_criteria(criteria)},
                                             {"cohort_examples", cohort_examples},
                                             {"criteria_examples", criteria_examples},
                                             {"dialect", options.dialect}});
    return {{"system", system_message(options)}, {"user", user}};
}

}  // namespace

PromptBundle compile_prompt(const CohortCriteria& criteria, Strategy strategy, const VectorIndex* ask_index,
                            const VectorIndex* coho_index, const PromptOptions& options) {
    if (uses_ask(strategy) && !ask_index) {
        throw ConfigError(std::string("strategy ") + std::string(strategy_label(strategy)) + " requires the ASK index");
    }
    if (uses_coho(strategy) && !coho_index) {
        throw ConfigError(std::string("strategy ") + std::string(strategy_label(strategy)) + " requires the COHO index");
    }
    PromptBundle bundle;
    bundle.strategy = strategy;
    bundle.sampling = options.sampling;

    std::vector<Exemplar> exemplars;
    if (uses_coho(strategy)) {
        for (const auto& hit : coho_index->retrieve(masked_criteria_text(criteria), options.retrieval)) {
            const auto* item = coho_index->find(hit.entry_id);
            exemplars.push_back({KBKind::Coho, hit.entry_id, "", hit.score, item->text, item->sql});
        }
    }
    if (uses_ask(strategy)) {
        std::set<std::string> seen;
        for (const auto* list : {&criteria.inclusion, &criteria.exclusion}) {
            for (const auto& cr : *list) {
                const auto query = mask_entities(cr.text, cr.entities);
                for (const auto& hit : ask_index->retrieve(query, options.retrieval)) {
                    if (!seen.insert(hit.entry_id).second) continue;
                    const auto* item = ask_index->find(hit.entry_id);
                    exemplars.push_back({KBKind::Ask, hit.entry_id, cr.id, hit.score, item->text, item->sql});
                }
            }
        }
    }

    bundle.messages = render_cohort_messages(criteria, exemplars, options);
    while (bundle.char_count() > options.char_budget && !exemplars.empty()) {
        auto worst = std::min_element(exemplars.begin(), exemplars.end(), [](const Exemplar& a, const Exemplar& b) {
            // "less" = should be dropped first: lower score, then larger id
            if (a.score != b.score) return a.score < b.score;
            return a.entry_id > b.entry_id;
        });
        exemplars.erase(worst);
        ++bundle.dropped_exemplars;
        bundle.messages = render_cohort_messages(criteria, exemplars, options);
    }

    // record exemplars in rendered order: cohort-level first, then per criterion
    std::vector<Exemplar> coho, ask;
    for (const auto& e : exemplars) (e.source == KBKind::Coho ? coho : ask).push_back(e);
    std::sort(coho.begin(), coho.end(), by_score);
    bundle.exemplars = coho;
    for (const auto* list : {&criteria.inclusion, &criteria.exclusion}) {
        for (const auto& cr : *list) {
            std::vector<Exemplar> group;
            for (const auto& e : ask) {
                if (e.criterion_id == cr.id) group.push_back(e);
            }
            std::sort(group.begin(), group.end(), by_score);
            bundle.exemplars.insert(bundle.exemplars.end(), group.begin(), group.end());
        }
    }
    return bundle;
}

PromptBundle compile_index_prompt(const CohortCriteria& criteria, const PromptOptions& options) {
    PromptBundle bundle;
    bundle.sampling = options.sampling;
    const auto user = text::render_template(prompts::get("funnel_index_sql").body,
                                            {{"criteria", serialize_criteria(criteria)},
                                             {"index_date_rule", criteria.index_date_rule},
                                             {"dialect", options.dialect}});
    bundle.messages = {{"system", system_message(options)}, {"user", user}};
    return bundle;
}

PromptBundle compile_criterion_prompt(const CohortCriteria& criteria, const Criterion& criterion, bool inclusion,
                                      const PromptOptions& options) {
    PromptBundle bundle;
    bundle.sampling = options.sampling;
    const auto user = text::render_template(prompts::get("funnel_criterion_sql").body,
                                            {{"criteria", serialize_criteria(criteria)},
                                             {"index_date_rule", criteria.index_date_rule},
                                             {"criterion_id", criterion.id},
                                             {"criterion_text", criterion.text},
                                             {"kind", inclusion ? "inclusion" : "exclusion"},
                                             {"dialect", options.dialect}});
    bundle.messages = {{"system", system_message(options)}, {"user", user}};
    return bundle;
}

namespace {

std::string clean_statement(std::string_view s) {
    s = text::trim(s);
    while (!s.empty() && s.back() == ';') s = text::trim(s.substr(0, s.size() - 1));
    return std::string(s);
}

bool word_at(std::string_view s, std::size_t pos, std::string_view word) {
    if (pos + word.size() > s.size()) return false;
    if (!text::iequals(s.substr(pos, word.size()), word)) return false;
    const auto is_w = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    if (pos > 0 && is_w(s[pos - 1])) return false;
    if (pos + word.size() < s.size() && is_w(s[pos + word.size()])) return false;
    return true;
}

}  // namespace

std::optional<std::string> extract_sql(std::string_view out) {
    const auto fence = out.find("```");
    if (fence != std::string_view::npos) {
        auto body_start = out.find('\n', fence);
        if (body_start != std::string_view::npos) {
            ++body_start;
            const auto close = out.find("```", body_start);
            auto body = clean_statement(out.substr(body_start, close == std::string_view::npos ? std::string_view::npos
                                                                                              : close - body_start));
            if (!body.empty()) return body;
        }
    }

    std::vector<std::size_t> ends;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const char c = out[i];
        if (c == ';' || c == '\n') ends.push_back(i);
        if (c == '.' && (i + 1 == out.size() || std::isspace(static_cast<unsigned char>(out[i + 1])))) ends.push_back(i);
    }
    ends.push_back(out.size());

    std::optional<std::string> best;
    for (std::size_t start = 0; start < out.size(); ++start) {
        if (!word_at(out, start, "SELECT") && !word_at(out, start, "WITH")) continue;
        for (auto it = ends.rbegin(); it != ends.rend(); ++it) {
            if (*it <= start) break;
            auto candidate = clean_statement(out.substr(start, *it - start));
            if (best && candidate.size() <= best->size()) break;
            if (sql::parses(candidate)) {
                best = std::move(candidate);
                break;
            }
        }
    }
    return best;
}

GeneratedSQL generate_sql(const PromptBundle& bundle, LlmProvider& llm) {
    LlmRequest req{bundle.messages, bundle.sampling};
    const std::string reply = llm.complete(req);
    auto sql = extract_sql(reply);
    if (!sql) throw GenerationError("no SQL statement found in the model output");
    GeneratedSQL g;
    g.placeholders = parse_placeholders(*sql);
    g.sql = std::move(*sql);
    g.strategy = bundle.strategy;
    return g;
}

ExecutableOutcome self_heal(const std::string& sql, SqlBackend& backend, LlmProvider& llm, const HealingConfig& cfg,
                            const PromptOptions& options, const PlaceholderResolver& resolver) {
    if (cfg.max_iterations < 0) throw ConfigError("max healing iterations must be non-negative");
    std::vector<HealAttempt> attempts;
    std::string current = sql;
    int iterations = 0;
    while (true) {
        try {
            RowSet rows = backend.execute(current);
            return {current, iterations, std::move(attempts), std::move(rows)};
        } catch (const ExecutionError& ex) {
            attempts.push_back({current, ex.diagnostic()});
        }
        if (iterations >= cfg.max_iterations) {
            std::string what =
                "query still fails after " + std::to_string(iterations) + " repair iterations: " + attempts.back().error;
            throw HealingFailure(what, std::move(attempts), iterations);
        }
        ++iterations;
        LlmRequest req;
        req.params = options.sampling;
        req.messages = {{"system", system_message(options)},
                        {"user", text::render_template(prompts::get("heal_sql").body,
                                                       {{"sql", attempts.back().sql},
                                                        {"error", attempts.back().error},
                                                        {"dialect", options.dialect}})}};
        const std::string reply = llm.complete(req);
        auto repaired = extract_sql(reply);
        current = repaired ? *repaired : std::string(text::trim(reply));
        if (resolver) {
            try {
                if (!parse_placeholders(current).empty()) current = resolver(current);
            } catch (const Error&) {
                // left unresolved; the engine reports it on the next attempt
            }
        }
    }
}

}  // namespace epicohort
