#pragma once

#include "epicohort/embedding.hpp"
#include "epicohort/generation.hpp"
#include "epicohort/llm.hpp"
#include "epicohort/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

struct ConceptRecord {
    std::int64_t concept_id = 0;
    std::string name;
    Domain domain = Domain::Condition;
    std::string vocabulary;
    std::vector<std::string> synonyms;
};

// CONCEPT-style delimited file (columns concept_id, concept_name, domain_id,
// vocabulary_id, matched by header name) plus an optional CONCEPT_SYNONYM-
// style file (concept_id, concept_synonym_name). Rows whose domain_id is not
// one of the seven clinical domains are skipped.
std::vector<ConceptRecord> load_vocabulary(const std::string& concept_path, const std::string& synonym_path = "");

struct ConceptCandidate {
    std::int64_t concept_id = 0;
    double score = 0.0;

    bool operator==(const ConceptCandidate&) const = default;
};

struct ConceptMapping {
    std::string term;
    Domain domain = Domain::Condition;
    std::vector<ConceptCandidate> candidates;  // non-increasing score
    std::vector<std::int64_t> chosen;          // subset of candidate ids
    bool verified = false;
};

struct NormalizeOptions {
    double floor = 0.30;             // minimum cosine for a candidate
    std::size_t max_candidates = 10;
};

// Per-domain exact-scan index over concept names and synonyms.
class VocabularyIndex {
public:
    struct Surface {
        std::int64_t concept_id;
        std::string text;
        std::string lower;
        Vector vector;
    };

    // Throws ValidationError on duplicate concept ids.
    static VocabularyIndex build(const std::vector<ConceptRecord>& concepts, EmbeddingProvider& provider);

    bool empty() const { return concepts_.empty(); }
    std::size_t size() const { return concepts_.size(); }
    const ConceptRecord* find(std::int64_t concept_id) const;
    const std::vector<Surface>& surfaces(Domain d) const;
    EmbeddingProvider& provider() const { return *provider_; }

private:
    std::map<std::int64_t, ConceptRecord> concepts_;
    std::map<Domain, std::vector<Surface>> by_domain_;
    EmbeddingProvider* provider_ = nullptr;
};

// Ranks the domain's concepts by their best name/synonym cosine to `term`.
// An exact case-insensitive name or synonym match scores 1.0 and ranks
// first. Candidates below the floor are discarded. With a verifier, the
// verifier picks the chosen subset; without one, the top candidate is chosen.
// Throws NormalizationError when nothing survives.
ConceptMapping normalize_term(std::string_view term, Domain domain, const VocabularyIndex& index,
                              LlmProvider* verifier = nullptr, const NormalizeOptions& options = {});

// Replaces each placeholder with its mapping's chosen ids joined by ", ".
// Mappings are matched on (domain, term) with the term compared
// case-insensitively after trimming. Throws ResolutionError naming the first
// unresolved placeholder.
std::string resolve_placeholders(const GeneratedSQL& generated, const std::vector<ConceptMapping>& mappings);
std::string resolve_placeholders(std::string_view sql, const std::vector<ConceptMapping>& mappings);

}  // namespace epicohort
