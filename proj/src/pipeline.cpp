#include "epicohort/pipeline.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <algorithm>

namespace epicohort {

namespace {

constexpr std::pair<JobState, std::string_view> kStateNames[] = {
    {JobState::Queued, "QUEUED"},       {JobState::Parsing, "PARSING"},
    {JobState::Retrieving, "RETRIEVING"}, {JobState::Generating, "GENERATING"},
    {JobState::Normalizing, "NORMALIZING"}, {JobState::Healing, "HEALING"},
    {JobState::Executing, "EXECUTING"}, {JobState::Funneling, "FUNNELING"},
    {JobState::Done, "DONE"},           {JobState::Failed, "FAILED"},
};

}  // namespace

std::string_view job_state_name(JobState s) {
    for (const auto& [state, name] : kStateNames) {
        if (state == s) return name;
    }
    return "FAILED";
}

std::optional<JobState> parse_job_state(std::string_view s) {
    for (const auto& [state, name] : kStateNames) {
        if (text::iequals(s, name)) return state;
    }
    return std::nullopt;
}

bool is_terminal(JobState s) { return s == JobState::Done || s == JobState::Failed; }

std::string ConceptResolver::resolve(const std::string& sql) {
    for (const auto& p : parse_placeholders(sql)) {
        auto key = std::make_pair(p.domain, text::to_lower(text::trim(p.term)));
        if (cache_.count(key)) continue;
        try {
            cache_[key] = normalize_term(p.term, p.domain, vocab_, verifier_, options_);
        } catch (const NormalizationError&) {
            cache_[key] = std::nullopt;
        }
    }
    return resolve_placeholders(std::string_view(sql), mappings());
}

std::vector<ConceptMapping> ConceptResolver::mappings() const {
    std::vector<ConceptMapping> out;
    for (const auto& [_, m] : cache_) {
        if (m) out.push_back(*m);
    }
    return out;
}

namespace {

void notify(const StateCallback& cb, JobState s) {
    if (cb) cb(s);
}

void check_resources(const PipelineResources& res) {
    if (!res.llm) throw ConfigError("pipeline needs an LLM provider");
    if (!res.vocab) throw ConfigError("pipeline needs a vocabulary index");
    if (!res.backend) throw ConfigError("pipeline needs a SQL backend");
}

struct Executed {
    std::string generated;
    ExecutableOutcome outcome;
};

Executed generate_and_run(const PromptBundle& bundle, const PipelineResources& res, const PipelineOptions& options,
                          ConceptResolver& resolver) {
    GeneratedSQL g = generate_sql(bundle, *res.llm);
    const std::string executable = resolver.resolve(g.sql);
    auto outcome = self_heal(executable, *res.backend, *res.llm, options.healing, options.prompt,
                             [&](const std::string& s) { return resolver.resolve(s); });
    return {g.sql, std::move(outcome)};
}

}  // namespace

PipelineOutput run_pipeline(std::string_view criteria_text, Strategy strategy, const PipelineResources& res,
                            const PipelineOptions& options, const StateCallback& on_state) {
    check_resources(res);
    notify(on_state, JobState::Parsing);
    StructuredCriteriaParser fallback;
    CriteriaParser& parser = res.parser ? *res.parser : static_cast<CriteriaParser&>(fallback);
    CohortCriteria criteria = parse_criteria(criteria_text, parser, res.detector);
    return run_pipeline(criteria, strategy, res, options, [&](JobState s) {
        if (s != JobState::Parsing) notify(on_state, s);
    });
}

PipelineOutput run_pipeline(const CohortCriteria& input, Strategy strategy, const PipelineResources& res,
                            const PipelineOptions& options, const StateCallback& on_state) {
    check_resources(res);
    notify(on_state, JobState::Parsing);
    PipelineOutput out;
    out.strategy = strategy;
    out.criteria = input;
    if (auto problems = validate_criteria(out.criteria); !problems.empty()) {
        throw ParseError("invalid criteria: " + text::join(problems, "; "));
    }
    if (res.detector) {
        for (auto* list : {&out.criteria.inclusion, &out.criteria.exclusion}) {
            for (auto& c : *list) {
                if (c.entities.empty()) c.entities = detect_entities(c.text, *res.detector);
            }
        }
    }

    notify(on_state, JobState::Retrieving);
    const PromptBundle bundle = compile_prompt(out.criteria, strategy, res.ask_index, res.coho_index, options.prompt);
    out.exemplars = bundle.exemplars;

    notify(on_state, JobState::Generating);
    GeneratedSQL g = generate_sql(bundle, *res.llm);
    out.generated_sql = g.sql;

    notify(on_state, JobState::Normalizing);
    ConceptResolver resolver(*res.vocab, res.verifier, options.normalize);
    const std::string executable = resolver.resolve(g.sql);

    notify(on_state, JobState::Healing);
    auto outcome = self_heal(executable, *res.backend, *res.llm, options.healing, options.prompt,
                             [&](const std::string& s) { return resolver.resolve(s); });
    out.executable_sql = outcome.final_sql;
    out.iterations = outcome.iterations;
    out.attempts = outcome.attempts;

    notify(on_state, JobState::Executing);
    out.cohort = cohort_from_rows(outcome.rows);

    if (options.funnel) {
        notify(on_state, JobState::Funneling);
        auto index_run = generate_and_run(compile_index_prompt(out.criteria, options.prompt), res, options, resolver);
        const Cohort index_cohort = cohort_from_rows(index_run.outcome.rows);
        out.funnel_queries.push_back({"index", StepKind::Index, index_run.generated, index_run.outcome.final_sql,
                                      index_run.outcome.iterations, index_run.outcome.attempts});
        materialize_index_cohort(*res.backend, index_cohort);

        std::vector<std::pair<const Criterion*, bool>> order;
        for (const auto& c : out.criteria.inclusion) order.emplace_back(&c, true);
        for (const auto& c : out.criteria.exclusion) order.emplace_back(&c, false);
        if (options.exclusions_first) {
            std::stable_partition(order.begin(), order.end(), [](const auto& p) { return !p.second; });
        }
        std::vector<CriterionCohort> steps;
        for (const auto& [criterion, inclusion] : order) {
            auto run = generate_and_run(compile_criterion_prompt(out.criteria, *criterion, inclusion, options.prompt),
                                        res, options, resolver);
            const StepKind kind = inclusion ? StepKind::Inclusion : StepKind::Exclusion;
            steps.push_back({criterion->id, kind, person_set_from_rows(run.outcome.rows), run.outcome.final_sql});
            out.funnel_queries.push_back({criterion->id, kind, run.generated, run.outcome.final_sql,
                                          run.outcome.iterations, run.outcome.attempts});
        }
        out.funnel = compute_funnel(index_cohort, steps, index_run.outcome.final_sql);
    }
    out.mappings = resolver.mappings();
    return out;
}

nlohmann::json to_json(const ConceptMapping& m) {
    nlohmann::json candidates = nlohmann::json::array();
    for (const auto& c : m.candidates) candidates.push_back({{"concept_id", c.concept_id}, {"score", c.score}});
    return {{"term", m.term},
            {"domain", domain_surface(m.domain)},
            {"candidates", candidates},
            {"chosen", m.chosen},
            {"verified", m.verified}};
}

nlohmann::json to_json(const HealAttempt& a) { return {{"sql", a.sql}, {"error", a.error}}; }

}  // namespace epicohort
