#pragma once

#include "epicohort/backend.hpp"
#include "epicohort/criteria.hpp"
#include "epicohort/errors.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/llm.hpp"
#include "epicohort/placeholder.hpp"
#include "epicohort/retrieval.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

enum class Strategy { ZS, RAG_A, RAG_C, RAG_AC };

inline constexpr Strategy kAllStrategies[] = {Strategy::ZS, Strategy::RAG_A, Strategy::RAG_C, Strategy::RAG_AC};

std::string_view strategy_name(Strategy s);   // "zs", "rag_a", "rag_c", "rag_ac"
std::string_view strategy_label(Strategy s);  // "ZS", "RAG+A", "RAG+C", "RAG+A+C"
// Accepts names and labels, case-insensitively.
std::optional<Strategy> parse_strategy(std::string_view s);
bool uses_ask(Strategy s);
bool uses_coho(Strategy s);

struct Exemplar {
    KBKind source = KBKind::Ask;
    std::string entry_id;
    std::string criterion_id;  // ASK exemplars only
    double score = 0.0;
    std::string text;
    std::string sql;
};

struct PromptOptions {
    RetrievalConfig retrieval;        // k and leave-one-out exclusions
    std::size_t char_budget = 24000;  // whole prompt, all messages
    std::string dialect = "sqlite";
    SamplingParams sampling;          // temperature 0.0
};

struct PromptBundle {
    Strategy strategy = Strategy::ZS;
    std::vector<Message> messages;
    std::vector<Exemplar> exemplars;  // in rendered order
    std::size_t dropped_exemplars = 0;
    SamplingParams sampling;

    std::size_t char_count() const;
};

// The criteria text with every criterion's entities masked, in the
// structured text form. This is the cohort-level retrieval query.
std::string masked_criteria_text(const CohortCriteria& c);

// ZS: instructions and criteria only. RAG_A: top-k ASK exemplars per
// criterion, deduplicated by entry id (first criterion wins) and grouped
// under their criterion. RAG_C: top-k COHO exemplars for the whole masked
// criteria text. RAG_AC: both. Exemplars are ordered by descending
// similarity; when the rendered prompt exceeds the character budget the
// lowest-similarity exemplars are dropped first.
// Throws ConfigError when a required index is missing.
PromptBundle compile_prompt(const CohortCriteria& criteria, Strategy strategy, const VectorIndex* ask_index,
                            const VectorIndex* coho_index, const PromptOptions& options);

// Funnel prompts: one query returning (person_id, index_date) and one query
// per criterion returning the matching person_id set.
PromptBundle compile_index_prompt(const CohortCriteria& criteria, const PromptOptions& options);
PromptBundle compile_criterion_prompt(const CohortCriteria& criteria, const Criterion& criterion, bool inclusion,
                                      const PromptOptions& options);

// First fenced code block; otherwise the longest SELECT/WITH-initial
// substring that parses. nullopt when neither exists.
std::optional<std::string> extract_sql(std::string_view llm_output);

struct HealAttempt {
    std::string sql;
    std::string error;
};

struct GeneratedSQL {
    std::string sql;
    std::vector<Placeholder> placeholders;
    Strategy strategy = Strategy::ZS;
    std::vector<HealAttempt> attempts;
};

// Throws GenerationError when the reply holds no SQL, GrammarError on a
// malformed placeholder.
GeneratedSQL generate_sql(const PromptBundle& bundle, LlmProvider& llm);

struct HealingConfig {
    int max_iterations = 3;
};

struct ExecutableOutcome {
    std::string final_sql;
    int iterations = 0;
    std::vector<HealAttempt> attempts;  // failed attempts, in order
    RowSet rows;                        // result of the successful execution
};

class HealingFailure : public Error {
public:
    HealingFailure(const std::string& what, std::vector<HealAttempt> attempts, int iterations)
        : Error(what), attempts_(std::move(attempts)), iterations_(iterations) {}
    const std::vector<HealAttempt>& attempts() const noexcept { return attempts_; }
    int iterations() const noexcept { return iterations_; }

private:
    std::vector<HealAttempt> attempts_;
    int iterations_;
};

// Maps placeholder SQL to executable SQL; used when a repaired query comes
// back with placeholders.
using PlaceholderResolver = std::function<std::string(const std::string&)>;

// Executes `sql`; on an engine error asks the LLM for a repair, feeding back
// the failing SQL and the verbatim diagnostic, up to max_iterations times.
// The loop is sequential. Throws HealingFailure with the full history.
ExecutableOutcome self_heal(const std::string& sql, SqlBackend& backend, LlmProvider& llm,
                            const HealingConfig& cfg, const PromptOptions& options,
                            const PlaceholderResolver& resolver = {});

}  // namespace epicohort
