#pragma once

#include "epicohort/backend.hpp"
#include "epicohort/cohort.hpp"
#include "epicohort/criteria.hpp"
#include "epicohort/generation.hpp"
#include "epicohort/normalize.hpp"
#include "epicohort/retrieval.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

enum class JobState { Queued, Parsing, Retrieving, Generating, Normalizing, Healing, Executing, Funneling, Done, Failed };

std::string_view job_state_name(JobState s);  // "QUEUED", ...
std::optional<JobState> parse_job_state(std::string_view s);
bool is_terminal(JobState s);

// Borrowed collaborators. Only llm, vocab and backend are mandatory.
struct PipelineResources {
    LlmProvider* llm = nullptr;
    LlmProvider* verifier = nullptr;
    EntityDetector* detector = nullptr;
    CriteriaParser* parser = nullptr;  // StructuredCriteriaParser when null
    const VectorIndex* ask_index = nullptr;
    const VectorIndex* coho_index = nullptr;
    const VocabularyIndex* vocab = nullptr;
    SqlBackend* backend = nullptr;
};

struct PipelineOptions {
    PromptOptions prompt;
    HealingConfig healing;
    NormalizeOptions normalize;
    bool funnel = true;
    bool exclusions_first = false;  // funnel order override
};

struct FunnelQuery {
    std::string criterion_id;
    StepKind kind = StepKind::Index;
    std::string generated_sql;   // with placeholders
    std::string executable_sql;  // after resolution and repair
    int iterations = 0;
    std::vector<HealAttempt> attempts;
};

struct PipelineOutput {
    CohortCriteria criteria;
    Strategy strategy = Strategy::ZS;
    std::vector<Exemplar> exemplars;
    std::string generated_sql;
    std::string executable_sql;
    int iterations = 0;
    std::vector<HealAttempt> attempts;
    std::vector<ConceptMapping> mappings;
    Cohort cohort;
    std::optional<Funnel> funnel;
    std::vector<FunnelQuery> funnel_queries;
};

using StateCallback = std::function<void(JobState)>;

// Resolves placeholders through a per-run cache so every query in one run
// maps a given (domain, term) the same way.
class ConceptResolver {
public:
    ConceptResolver(const VocabularyIndex& vocab, LlmProvider* verifier, NormalizeOptions options)
        : vocab_(vocab), verifier_(verifier), options_(options) {}

    // Normalizes every placeholder in `sql` not seen before. Terms that fail
    // normalization are left unmapped and surface as ResolutionError.
    std::string resolve(const std::string& sql);
    std::vector<ConceptMapping> mappings() const;

private:
    const VocabularyIndex& vocab_;
    LlmProvider* verifier_;
    NormalizeOptions options_;
    std::map<std::pair<Domain, std::string>, std::optional<ConceptMapping>> cache_;
};

// Parse, retrieve, generate, normalize, heal, execute and (optionally)
// build the funnel. Reports each stage entered through `on_state`. Throws
// on the first failing stage.
PipelineOutput run_pipeline(std::string_view criteria_text, Strategy strategy, const PipelineResources& res,
                            const PipelineOptions& options, const StateCallback& on_state = {});
PipelineOutput run_pipeline(const CohortCriteria& criteria, Strategy strategy, const PipelineResources& res,
                            const PipelineOptions& options, const StateCallback& on_state = {});

nlohmann::json to_json(const ConceptMapping& m);
nlohmann::json to_json(const HealAttempt& a);

}  // namespace epicohort
