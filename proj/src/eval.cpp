#include "epicohort/eval.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace epicohort {

PatientMetrics patient_metrics(const Cohort& generated, const Cohort& reference) {
    std::size_t overlap = 0;
    for (const auto& [id, _] : generated.rows) overlap += reference.rows.count(id);
    PatientMetrics m;
    if (!generated.empty()) m.precision = static_cast<double>(overlap) / static_cast<double>(generated.size());
    if (!reference.empty()) m.recall = static_cast<double>(overlap) / static_cast<double>(reference.size());
    if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

double size_similarity(const Cohort& generated, const Cohort& reference) {
    return funnel_similarity(generated, reference);
}

DateMetrics date_metrics(const Cohort& generated, const Cohort& reference, long window_days) {
    std::size_t matched = 0, exact = 0, within = 0;
    for (const auto& [id, date] : generated.rows) {
        auto it = reference.rows.find(id);
        if (it == reference.rows.end()) continue;
        ++matched;
        const long diff = std::labs(days_between(date, it->second));
        if (diff == 0) ++exact;
        if (diff <= window_days) ++within;
    }
    if (matched == 0) return {};
    return {static_cast<double>(exact) / static_cast<double>(matched),
            static_cast<double>(within) / static_cast<double>(matched)};
}

SampleResult score_sample(const SampleOutcome& outcome, const Cohort& reference, const EvalConfig& cfg) {
    SampleResult r;
    r.sample_id = outcome.sample_id;
    if (!outcome.cohort) {
        r.error = outcome.error.empty() ? "no executable SQL" : outcome.error;
        return r;
    }
    r.valid_sql = true;
    if (outcome.cohort->empty()) return r;
    r.retrieved = true;
    const auto pm = patient_metrics(*outcome.cohort, reference);
    r.precision = pm.precision;
    r.recall = pm.recall;
    r.f1 = pm.f1;
    r.size_similarity = size_similarity(*outcome.cohort, reference);
    const auto dm = date_metrics(*outcome.cohort, reference, cfg.window_days);
    r.date_exact = dm.exact;
    r.date_within_window = dm.within_window;
    return r;
}

std::vector<EvalSample> samples_from_kb(const std::vector<KBEntry>& coho, CriteriaParser* parser) {
    StructuredCriteriaParser fallback;
    CriteriaParser& p = parser ? *parser : static_cast<CriteriaParser&>(fallback);
    std::vector<EvalSample> out;
    for (const auto& e : coho) out.push_back({e.id, parse_criteria(e.natural_text, p), e.sql});
    return out;
}

StrategySummary summarize(Strategy s, const std::vector<SampleResult>& results) {
    StrategySummary sum;
    sum.strategy = s;
    sum.n_samples = results.size();
    sum.samples = results;
    if (results.empty()) return sum;
    for (const auto& r : results) {
        sum.valid_sql += r.valid_sql ? 1.0 : 0.0;
        sum.retrieved += r.retrieved ? 1.0 : 0.0;
        sum.f1 += r.f1;
        sum.precision += r.precision;
        sum.recall += r.recall;
        sum.size_similarity += r.size_similarity;
        sum.date_exact += r.date_exact;
        sum.date_within_window += r.date_within_window;
    }
    const double scale = 100.0 / static_cast<double>(results.size());
    for (double* v : {&sum.valid_sql, &sum.retrieved, &sum.f1, &sum.precision, &sum.recall, &sum.size_similarity,
                      &sum.date_exact, &sum.date_within_window}) {
        *v *= scale;
    }
    return sum;
}

EvalReport run_eval(const std::vector<EvalSample>& samples, const PipelineResources& res, const EvalConfig& cfg,
                    const PipelineOptions& options) {
    if (cfg.window_days < 0) throw ConfigError("window_days must be non-negative");
    if (!res.backend) throw ConfigError("evaluation needs a SQL backend");
    res.backend->execute("SELECT 1");

    EvalReport report;
    report.window_days = cfg.window_days;
    report.leave_one_out = cfg.leave_one_out;

    // reference cohorts are computed once; reference placeholders go through
    // the same normalizer as generated ones
    std::vector<std::pair<const EvalSample*, Cohort>> usable;
    for (const auto& s : samples) {
        try {
            std::string sql = s.reference_sql;
            if (!parse_placeholders(sql).empty()) {
                if (!res.vocab) throw ConfigError("reference SQL has placeholders but no vocabulary is configured");
                ConceptResolver resolver(*res.vocab, nullptr, options.normalize);
                sql = resolver.resolve(sql);
            }
            usable.emplace_back(&s, cohort_from_rows(res.backend->execute(sql)));
        } catch (const Error& e) {
            report.excluded.push_back({s.id, e.what()});
        }
    }

    for (Strategy strategy : cfg.strategies) {
        std::vector<SampleResult> results;
        for (const auto& [sample, reference] : usable) {
            PipelineOptions opts = options;
            opts.funnel = false;
            if (cfg.leave_one_out) opts.prompt.retrieval.exclude_ids.insert(sample->id);
            SampleOutcome outcome;
            outcome.sample_id = sample->id;
            try {
                outcome.cohort = run_pipeline(sample->criteria, strategy, res, opts).cohort;
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                outcome.error = e.what();
            }
            results.push_back(score_sample(outcome, reference, cfg));
        }
        report.strategies.push_back(summarize(strategy, results));
    }
    return report;
}

nlohmann::json to_json(const SampleResult& r) {
    nlohmann::json j = {{"sample_id", r.sample_id},
                        {"valid_sql", r.valid_sql},
                        {"retrieved", r.retrieved},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"f1", r.f1},
                        {"size_similarity", r.size_similarity},
                        {"date_exact", r.date_exact},
                        {"date_within_window", r.date_within_window}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json strategies = nlohmann::json::array();
    for (const auto& s : r.strategies) {
        nlohmann::json samples = nlohmann::json::array();
        for (const auto& x : s.samples) samples.push_back(to_json(x));
        strategies.push_back({{"strategy", strategy_name(s.strategy)},
                              {"label", strategy_label(s.strategy)},
                              {"n_samples", s.n_samples},
                              {"valid_sql", s.valid_sql},
                              {"retrieved", s.retrieved},
                              {"f1", s.f1},
                              {"precision", s.precision},
                              {"recall", s.recall},
                              {"size_similarity", s.size_similarity},
                              {"date_exact", s.date_exact},
                              {"date_within_window", s.date_within_window},
                              {"samples", samples}});
    }
    nlohmann::json excluded = nlohmann::json::array();
    for (const auto& e : r.excluded) excluded.push_back({{"sample_id", e.sample_id}, {"reason", e.reason}});
    return {{"window_days", r.window_days},
            {"leave_one_out", r.leave_one_out},
            {"conventions",
             {{"size_similarity", "min(|G|,|R|)/max(|G|,|R|); 1 when both empty"},
              {"date_overlap", "share of matched persons with identical index dates"},
              {"within_window", "share of matched persons with |date difference| <= window_days, inclusive"},
              {"failures", "invalid SQL or empty result scores 0 on every metric"},
              {"reference_failures", "excluded from the means and listed under excluded"}}},
            {"strategies", strategies},
            {"excluded", excluded}};
}

std::string format_report_table(const EvalReport& r) {
    const std::vector<std::string> headers = {"Method", "Valid SQL", "Retrieved", "F1", "Prec.", "Recall",
                                              "Size sim.", "Date overlap",
                                              "Within " + std::to_string(r.window_days) + "d"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : r.strategies) {
        std::vector<std::string> row = {std::string(strategy_label(s.strategy))};
        for (double v : {s.valid_sql, s.retrieved, s.f1, s.precision, s.recall, s.size_similarity, s.date_exact,
                         s.date_within_window}) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%.1f", v);
            row.emplace_back(buf);
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(headers.size());
    for (std::size_t i = 0; i < headers.size(); ++i) {
        width[i] = headers[i].size();
        for (const auto& row : rows) width[i] = std::max(width[i], row[i].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += " | ";
            const auto pad = std::string(width[i] - cells[i].size(), ' ');
            out += i == 0 ? cells[i] + pad : pad + cells[i];
        }
        return out + "\n";
    };
    std::string out = line(headers);
    std::string rule;
    for (std::size_t i = 0; i < headers.size(); ++i) {
        if (i) rule += "-+-";
        rule += std::string(width[i], '-');
    }
    out += rule + "\n";
    for (const auto& row : rows) out += line(row);
    if (!r.excluded.empty()) {
        out += "\n" + std::to_string(r.excluded.size()) + " sample(s) excluded: reference SQL failed\n";
    }
    return out;
}

}  // namespace epicohort
