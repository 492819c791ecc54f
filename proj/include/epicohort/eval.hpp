#pragma once

#include "epicohort/cohort.hpp"
#include "epicohort/generation.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/pipeline.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace epicohort {

struct PatientMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct DateMetrics {
    double exact = 0.0;
    double within_window = 0.0;
};

// Over the person-id sets G and R.
PatientMetrics patient_metrics(const Cohort& generated, const Cohort& reference);
// min(|G|,|R|) / max(|G|,|R|); 1 when both are empty.
double size_similarity(const Cohort& generated, const Cohort& reference);
// Fractions of the matched persons G∩R whose index dates are equal / at
// most window_days apart (inclusive). (0, 0) when nobody matches.
DateMetrics date_metrics(const Cohort& generated, const Cohort& reference, long window_days);

struct EvalConfig {
    long window_days = 30;
    std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
    bool leave_one_out = true;
};

struct SampleResult {
    std::string sample_id;
    bool valid_sql = false;
    bool retrieved = false;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double size_similarity = 0.0;
    double date_exact = 0.0;
    double date_within_window = 0.0;
    std::string error;  // why valid_sql is false, if it is
};

// What the pipeline produced for one sample. `cohort` is absent when no
// executable SQL came out of generation and healing.
struct SampleOutcome {
    std::string sample_id;
    std::optional<Cohort> cohort;
    std::string error;
};

SampleResult score_sample(const SampleOutcome& outcome, const Cohort& reference, const EvalConfig& cfg);

struct EvalSample {
    std::string id;
    CohortCriteria criteria;
    std::string reference_sql;
};

// COHO entries become samples: natural_text is parsed with `parser`
// (structured parser when null), sql is the reference.
std::vector<EvalSample> samples_from_kb(const std::vector<KBEntry>& coho, CriteriaParser* parser = nullptr);

struct StrategySummary {
    Strategy strategy = Strategy::ZS;
    std::size_t n_samples = 0;
    // Percentages in [0, 100], averaged over all usable samples.
    double valid_sql = 0.0;
    double retrieved = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double size_similarity = 0.0;
    double date_exact = 0.0;
    double date_within_window = 0.0;
    std::vector<SampleResult> samples;
};

struct ExcludedSample {
    std::string sample_id;
    std::string reason;
};

struct EvalReport {
    long window_days = 30;
    bool leave_one_out = true;
    std::vector<StrategySummary> strategies;
    std::vector<ExcludedSample> excluded;  // reference SQL failed
};

// Means over all results, failures included as zeros.
StrategySummary summarize(Strategy s, const std::vector<SampleResult>& results);

// For each strategy, runs the monolithic pipeline on every sample and
// scores it against the sample's reference cohort. With leave_one_out the
// sample id is excluded from every retrieval. Samples whose reference SQL
// fails are dropped and listed under `excluded`. Throws ExecutionError when
// the backend cannot run a trivial query; no partial report is produced.
EvalReport run_eval(const std::vector<EvalSample>& samples, const PipelineResources& res, const EvalConfig& cfg,
                    const PipelineOptions& options);

nlohmann::json to_json(const SampleResult& r);
nlohmann::json to_json(const EvalReport& r);
// Plain-text table: Method | Valid SQL | Retrieved | F1 | Prec. | Recall |
// Size sim. | Date overlap | Within 30d
std::string format_report_table(const EvalReport& r);

}  // namespace epicohort
