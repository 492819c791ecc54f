#pragma once

#include "epicohort/embedding.hpp"
#include "epicohort/llm.hpp"
#include "epicohort/types.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

struct KBEntry;

// Replaces each span's substring with its domain label ("CONDITION", ...).
// Spans may arrive unsorted; overlapping or out-of-range spans throw
// ValidationError.
std::string mask_entities(std::string_view text, std::vector<EntitySpan> spans);

class EntityDetector {
public:
    virtual ~EntityDetector() = default;
    // Returned spans are sorted, non-overlapping and satisfy check_span.
    virtual std::vector<EntitySpan> detect(std::string_view text) = 0;
};

// Case-insensitive, whole-word dictionary scan. Longer terms win over
// shorter ones starting at the same position; matches never overlap.
class DictionaryEntityDetector : public EntityDetector {
public:
    explicit DictionaryEntityDetector(std::map<std::string, Domain> terms);
    // Delimited file with columns term, domain (header required).
    static DictionaryEntityDetector from_file(const std::string& path);

    std::vector<EntitySpan> detect(std::string_view text) override;
    const std::map<std::string, Domain>& terms() const { return terms_; }

private:
    std::map<std::string, Domain> terms_;  // lowercase term -> domain
    std::size_t max_words_ = 1;
};

// Asks an LLM for a JSON array of {"text", "domain"} objects and locates each
// mention in the input (whole-word, case-insensitive, first unused match).
class LlmEntityDetector : public EntityDetector {
public:
    explicit LlmEntityDetector(LlmProvider& llm) : llm_(llm) {}
    std::vector<EntitySpan> detect(std::string_view text) override;

private:
    LlmProvider& llm_;
};

std::vector<EntitySpan> detect_entities(std::string_view text, EntityDetector& detector);

struct RetrievalConfig {
    std::size_t k = 5;
    std::set<std::string> exclude_ids;
};

struct RetrievalHit {
    std::string entry_id;
    double score = 0.0;

    bool operator==(const RetrievalHit&) const = default;
};

// Hit ordering: descending score, ties by ascending entry id.
bool hit_before(const RetrievalHit& a, const RetrievalHit& b);

// Immutable exact-scan index over KB entries. Safe for concurrent reads when
// the embedding provider is.
class VectorIndex {
public:
    struct Item {
        std::string id;
        std::string text;    // natural text, rendered into prompts
        std::string masked;  // text used for similarity
        std::string sql;
        Vector vector;
    };

    VectorIndex() = default;
    // Entries without a stored embedding are embedded from masked_text.
    // Throws IndexingError listing entries whose embedding failed.
    static VectorIndex build(const std::vector<KBEntry>& entries, EmbeddingProvider& provider);

    std::vector<RetrievalHit> retrieve(std::string_view query_masked, const RetrievalConfig& cfg) const;
    std::vector<RetrievalHit> retrieve_vector(std::span<const double> query, const RetrievalConfig& cfg) const;

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const Item* find(std::string_view id) const;
    const std::vector<Item>& items() const { return items_; }
    EmbeddingProvider* provider() const { return provider_; }

private:
    std::vector<Item> items_;
    EmbeddingProvider* provider_ = nullptr;
};

}  // namespace epicohort
