#include "epicohort/retrieval.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/prompts.hpp"
#include "epicohort/text.hpp"

#include <algorithm>
#include <cctype>

namespace epicohort {

using nlohmann::json;

std::string mask_entities(std::string_view text, std::vector<EntitySpan> spans) {
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    std::string out;
    std::size_t cursor = 0;
    for (const auto& s : spans) {
        check_span(s, text);
        if (s.start < cursor) {
            throw ValidationError("overlapping entity spans at offset " + std::to_string(s.start));
        }
        out.append(text.substr(cursor, s.start - cursor));
        out.append(domain_label(s.domain));
        cursor = s.end;
    }
    out.append(text.substr(cursor));
    return out;
}

namespace {

bool is_word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u >= 0x80;
}

bool word_boundary_before(std::string_view text, std::size_t pos) {
    return pos == 0 || !is_word_char(text[pos - 1]);
}

bool word_boundary_after(std::string_view text, std::size_t end) {
    return end >= text.size() || !is_word_char(text[end]);
}

// First whole-word, case-insensitive occurrence of `needle` at or after `from`.
std::size_t find_word(std::string_view haystack, std::string_view needle, std::size_t from) {
    if (needle.empty()) return std::string_view::npos;
    const auto lower_hay = text::to_lower(haystack);
    const auto lower_needle = text::to_lower(needle);
    std::size_t pos = from;
    while ((pos = lower_hay.find(lower_needle, pos)) != std::string::npos) {
        if (word_boundary_before(haystack, pos) && word_boundary_after(haystack, pos + needle.size())) return pos;
        ++pos;
    }
    return std::string_view::npos;
}

}  // namespace

DictionaryEntityDetector::DictionaryEntityDetector(std::map<std::string, Domain> terms) {
    for (auto& [term, domain] : terms) {
        auto key = text::to_lower(text::trim(term));
        if (key.empty()) continue;
        terms_.emplace(std::move(key), domain);
    }
}

DictionaryEntityDetector DictionaryEntityDetector::from_file(const std::string& path) {
    auto rows = text::parse_delimited(text::read_file(path));
    if (rows.empty()) throw ConfigError("entity dictionary " + path + " is empty");
    std::map<std::string, Domain> terms;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 2) throw ConfigError("entity dictionary " + path + ": row " + std::to_string(i) + " needs term and domain");
        auto domain = parse_domain(rows[i][1]);
        if (!domain) throw ConfigError("entity dictionary " + path + ": unknown domain '" + rows[i][1] + "'");
        terms.emplace(rows[i][0], *domain);
    }
    return DictionaryEntityDetector(std::move(terms));
}

std::vector<EntitySpan> DictionaryEntityDetector::detect(std::string_view input) {
    std::vector<EntitySpan> out;
    if (terms_.empty()) return out;
    const auto lower = text::to_lower(input);
    std::size_t i = 0;
    while (i < input.size()) {
        if (!is_word_char(input[i]) || !word_boundary_before(input, i)) {
            ++i;
            continue;
        }
        std::size_t best_len = 0;
        const Domain* best_domain = nullptr;
        for (const auto& [term, domain] : terms_) {
            if (term.size() <= best_len || i + term.size() > lower.size()) continue;
            if (lower.compare(i, term.size(), term) == 0 && word_boundary_after(input, i + term.size())) {
                best_len = term.size();
                best_domain = &domain;
            }
        }
        if (best_domain) {
            out.push_back({i, i + best_len, std::string(input.substr(i, best_len)), *best_domain});
            i += best_len;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<EntitySpan> LlmEntityDetector::detect(std::string_view input) {
    if (text::trim(input).empty()) return {};
    const auto& tmpl = prompts::get("entity_detection");
    LlmRequest req;
    req.messages.push_back({"user", text::render_template(tmpl.body, {{"text", std::string(input)}})});
    const std::string reply = llm_.complete(req);
    const auto open = reply.find('[');
    const auto close = reply.rfind(']');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw ProviderError("entity detector reply contains no JSON array", false);
    }
    json arr;
    try {
        arr = json::parse(reply.substr(open, close - open + 1));
    } catch (const json::exception& ex) {
        throw ProviderError(std::string("entity detector reply is not valid JSON: ") + ex.what(), false);
    }
    std::vector<EntitySpan> spans;
    for (const auto& item : arr) {
        if (!item.is_object() || !item.contains("text") || !item.contains("domain")) continue;
        const auto mention = item["text"].get<std::string>();
        const auto domain = parse_domain(item["domain"].get<std::string>());
        if (!domain || mention.empty()) continue;
        std::size_t from = 0;
        while (true) {
            const auto pos = find_word(input, mention, from);
            if (pos == std::string_view::npos) break;
            const std::size_t end = pos + mention.size();
            const bool overlaps = std::any_of(spans.begin(), spans.end(), [&](const EntitySpan& s) {
                return pos < s.end && s.start < end;
            });
            if (!overlaps) {
                spans.push_back({pos, end, std::string(input.substr(pos, mention.size())), *domain});
                break;
            }
            from = pos + 1;
        }
    }
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    return spans;
}

std::vector<EntitySpan> detect_entities(std::string_view input, EntityDetector& detector) {
    if (input.empty()) return {};
    auto spans = detector.detect(input);
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    std::size_t cursor = 0;
    for (const auto& s : spans) {
        check_span(s, input);
        if (s.start < cursor) throw ProviderError("entity detector returned overlapping spans", false);
        cursor = s.end;
    }
    return spans;
}

bool hit_before(const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entry_id < b.entry_id;
}

VectorIndex VectorIndex::build(const std::vector<KBEntry>& entries, EmbeddingProvider& provider) {
    VectorIndex index;
    index.provider_ = &provider;
    std::vector<std::string> failed;
    std::string first_error;
    for (const auto& e : entries) {
        Item item{e.id, e.natural_text, e.masked_text, e.sql, {}};
        try {
            if (e.embedding && e.embedding->size() == provider.dimension()) {
                item.vector = *e.embedding;
            } else {
                item.vector = provider.embed(e.masked_text.empty() ? e.natural_text : e.masked_text);
            }
        } catch (const ProviderError& ex) {
            failed.push_back(e.id);
            if (first_error.empty()) first_error = ex.what();
            continue;
        }
        index.items_.push_back(std::move(item));
    }
    if (!failed.empty()) {
        throw IndexingError("embedding failed for " + std::to_string(failed.size()) + " entries: " + first_error,
                            std::move(failed));
    }
    return index;
}

std::vector<RetrievalHit> VectorIndex::retrieve(std::string_view query_masked, const RetrievalConfig& cfg) const {
    if (items_.empty()) return {};
    if (!provider_) throw ConfigError("index has no embedding provider");
    const Vector q = provider_->embed(query_masked);
    return retrieve_vector(q, cfg);
}

std::vector<RetrievalHit> VectorIndex::retrieve_vector(std::span<const double> query,
                                                       const RetrievalConfig& cfg) const {
    if (cfg.k < 1) throw ConfigError("retrieval k must be at least 1");
    std::vector<RetrievalHit> hits;
    hits.reserve(items_.size());
    for (const auto& item : items_) {
        if (cfg.exclude_ids.count(item.id)) continue;
        hits.push_back({item.id, cosine(query, item.vector)});
    }
    const std::size_t k = std::min(cfg.k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), hit_before);
    hits.resize(k);
    return hits;
}

const VectorIndex::Item* VectorIndex::find(std::string_view id) const {
    for (const auto& item : items_) {
        if (item.id == id) return &item;
    }
    return nullptr;
}

}  // namespace epicohort
