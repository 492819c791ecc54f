#include "epicohort/normalize.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/prompts.hpp"
#include "epicohort/text.hpp"

#include <algorithm>
#include <charconv>
#include <regex>
#include <set>

namespace epicohort {

namespace {

std::int64_t parse_id(const std::string& s, const std::string& where) {
    std::int64_t v = 0;
    const auto t = text::trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || v <= 0) {
        throw ValidationError(where + ": invalid concept_id '" + s + "'");
    }
    return v;
}

std::size_t require_column(const std::vector<std::string>& header, std::string_view name, const std::string& path) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (text::iequals(text::trim(header[i]), name)) return i;
    }
    throw ValidationError(path + ": missing column '" + std::string(name) + "'");
}

}  // namespace

std::vector<ConceptRecord> load_vocabulary(const std::string& concept_path, const std::string& synonym_path) {
    auto rows = text::parse_delimited(text::read_file(concept_path));
    if (rows.empty()) return {};
    const auto& header = rows.front();
    const auto c_id = require_column(header, "concept_id", concept_path);
    const auto c_name = require_column(header, "concept_name", concept_path);
    const auto c_domain = require_column(header, "domain_id", concept_path);
    const auto c_vocab = require_column(header, "vocabulary_id", concept_path);
    const auto width = std::max({c_id, c_name, c_domain, c_vocab}) + 1;

    std::vector<ConceptRecord> out;
    std::map<std::int64_t, std::size_t> position;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = concept_path + ":" + std::to_string(r + 1);
        if (row.size() < width) throw ValidationError(where + ": too few columns");
        auto domain = parse_domain(row[c_domain]);
        if (!domain) continue;
        ConceptRecord rec;
        rec.concept_id = parse_id(row[c_id], where);
        rec.name = std::string(text::trim(row[c_name]));
        rec.domain = *domain;
        rec.vocabulary = std::string(text::trim(row[c_vocab]));
        if (rec.name.empty()) throw ValidationError(where + ": empty concept_name");
        if (!position.emplace(rec.concept_id, out.size()).second) {
            throw ValidationError(where + ": duplicate concept_id " + std::to_string(rec.concept_id));
        }
        out.push_back(std::move(rec));
    }
    if (!synonym_path.empty()) {
        auto syn = text::parse_delimited(text::read_file(synonym_path));
        if (!syn.empty()) {
            const auto s_id = require_column(syn.front(), "concept_id", synonym_path);
            const auto s_name = require_column(syn.front(), "concept_synonym_name", synonym_path);
            for (std::size_t r = 1; r < syn.size(); ++r) {
                const std::string where = synonym_path + ":" + std::to_string(r + 1);
                if (syn[r].size() <= std::max(s_id, s_name)) throw ValidationError(where + ": too few columns");
                auto it = position.find(parse_id(syn[r][s_id], where));
                if (it == position.end()) continue;
                auto name = std::string(text::trim(syn[r][s_name]));
                if (!name.empty()) out[it->second].synonyms.push_back(std::move(name));
            }
        }
    }
    return out;
}

VocabularyIndex VocabularyIndex::build(const std::vector<ConceptRecord>& concepts, EmbeddingProvider& provider) {
    VocabularyIndex index;
    index.provider_ = &provider;
    for (const auto& c : concepts) {
        if (c.concept_id <= 0) throw ValidationError("concept_id must be positive: " + std::to_string(c.concept_id));
        if (text::trim(c.name).empty()) throw ValidationError("empty name for concept " + std::to_string(c.concept_id));
        if (!index.concepts_.emplace(c.concept_id, c).second) {
            throw ValidationError("duplicate concept_id " + std::to_string(c.concept_id));
        }
    }
    for (const auto& [id, c] : index.concepts_) {
        auto& bucket = index.by_domain_[c.domain];
        std::set<std::string> seen;
        auto add = [&](const std::string& s) {
            auto lower = text::to_lower(text::trim(s));
            if (lower.empty() || !seen.insert(lower).second) return;
            bucket.push_back({id, s, lower, provider.embed(s)});
        };
        add(c.name);
        for (const auto& syn : c.synonyms) add(syn);
    }
    return index;
}

const ConceptRecord* VocabularyIndex::find(std::int64_t concept_id) const {
    auto it = concepts_.find(concept_id);
    return it == concepts_.end() ? nullptr : &it->second;
}

const std::vector<VocabularyIndex::Surface>& VocabularyIndex::surfaces(Domain d) const {
    static const std::vector<Surface> kEmpty;
    auto it = by_domain_.find(d);
    return it == by_domain_.end() ? kEmpty : it->second;
}

namespace {

std::vector<std::int64_t> ask_verifier(LlmProvider& verifier, std::string_view term, Domain domain,
                                       const std::vector<ConceptCandidate>& candidates, const VocabularyIndex& index) {
    std::string listing;
    for (const auto& c : candidates) {
        const auto* rec = index.find(c.concept_id);
        listing += std::to_string(c.concept_id) + " | " + rec->name + " | " + rec->vocabulary + "\n";
    }
    LlmRequest req;
    req.messages.push_back({"user", text::render_template(prompts::get("verify_concepts").body,
                                                          {{"term", std::string(term)},
                                                           {"domain", std::string(domain_surface(domain))},
                                                           {"candidates", listing}})});
    const std::string reply = verifier.complete(req);
    std::set<std::int64_t> accepted;
    static const std::regex number(R"(\d+)");
    for (auto it = std::sregex_iterator(reply.begin(), reply.end(), number); it != std::sregex_iterator(); ++it) {
        std::int64_t v = 0;
        const auto s = it->str();
        if (std::from_chars(s.data(), s.data() + s.size(), v).ec == std::errc{}) accepted.insert(v);
    }
    std::vector<std::int64_t> chosen;
    for (const auto& c : candidates) {
        if (accepted.count(c.concept_id)) chosen.push_back(c.concept_id);
    }
    return chosen;
}

}  // namespace

ConceptMapping normalize_term(std::string_view term, Domain domain, const VocabularyIndex& index,
                              LlmProvider* verifier, const NormalizeOptions& options) {
    ConceptMapping m;
    m.term = std::string(text::trim(term));
    m.domain = domain;
    const auto& surfaces = index.surfaces(domain);
    if (m.term.empty()) throw NormalizationError("empty term");
    if (surfaces.empty()) {
        throw NormalizationError("no vocabulary concepts in domain " + std::string(domain_surface(domain)));
    }
    const auto lower = text::to_lower(m.term);
    const Vector q = index.provider().embed(m.term);
    std::map<std::int64_t, double> best;
    for (const auto& s : surfaces) {
        const double score = s.lower == lower ? 1.0 : std::min(cosine(q, s.vector), 1.0);
        auto [it, inserted] = best.emplace(s.concept_id, score);
        if (!inserted) it->second = std::max(it->second, score);
    }
    // exact matches outrank near-1.0 cosines that are not exact
    std::set<std::int64_t> exact;
    for (const auto& s : surfaces) {
        if (s.lower == lower) exact.insert(s.concept_id);
    }
    for (const auto& [id, score] : best) {
        if (score >= options.floor) m.candidates.push_back({id, score});
    }
    std::sort(m.candidates.begin(), m.candidates.end(), [&](const auto& a, const auto& b) {
        const bool ea = exact.count(a.concept_id) > 0, eb = exact.count(b.concept_id) > 0;
        if (ea != eb) return ea;
        if (a.score != b.score) return a.score > b.score;
        return a.concept_id < b.concept_id;
    });
    if (m.candidates.size() > options.max_candidates) m.candidates.resize(options.max_candidates);
    if (m.candidates.empty()) {
        throw NormalizationError("no concept above similarity floor for [" + std::string(domain_surface(domain)) + "@" +
                                 m.term + "]");
    }
    if (verifier) {
        m.chosen = ask_verifier(*verifier, m.term, domain, m.candidates, index);
        m.verified = true;
        if (m.chosen.empty()) {
            throw NormalizationError("verifier rejected every candidate for [" + std::string(domain_surface(domain)) +
                                     "@" + m.term + "]");
        }
    } else {
        m.chosen = {m.candidates.front().concept_id};
    }
    return m;
}

std::string resolve_placeholders(std::string_view sql, const std::vector<ConceptMapping>& mappings) {
    const auto placeholders = parse_placeholders(sql);
    return substitute_placeholders(sql, placeholders, [&](const Placeholder& p) {
        const auto key = text::to_lower(text::trim(p.term));
        for (const auto& m : mappings) {
            if (m.domain == p.domain && text::to_lower(text::trim(m.term)) == key && !m.chosen.empty()) {
                std::string ids;
                for (std::size_t i = 0; i < m.chosen.size(); ++i) {
                    if (i) ids += ", ";
                    ids += std::to_string(m.chosen[i]);
                }
                return ids;
            }
        }
        throw ResolutionError("unresolved placeholder " + p.surface());
    });
}

std::string resolve_placeholders(const GeneratedSQL& generated, const std::vector<ConceptMapping>& mappings) {
    return resolve_placeholders(std::string_view(generated.sql), mappings);
}

}  // namespace epicohort
