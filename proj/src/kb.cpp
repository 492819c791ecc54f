#include "epicohort/kb.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/retrieval.hpp"
#include "epicohort/text.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace epicohort {

using nlohmann::json;

std::string_view kb_kind_name(KBKind kind) { return kind == KBKind::Ask ? "ASK" : "COHO"; }

std::optional<KBKind> parse_kb_kind(std::string_view s) {
    const auto lower = text::to_lower(text::trim(s));
    if (lower == "ask") return KBKind::Ask;
    if (lower == "coho") return KBKind::Coho;
    return std::nullopt;
}

json to_json(const KBEntry& e) {
    json j;
    j["id"] = e.id;
    j["kind"] = kb_kind_name(e.kind);
    j["natural_text"] = e.natural_text;
    j["masked_text"] = e.masked_text;
    j["sql"] = e.sql;
    j["entities"] = json::array();
    for (const auto& s : e.entities) {
        j["entities"].push_back(
            {{"start", s.start}, {"end", s.end}, {"text", s.text}, {"domain", domain_label(s.domain)}});
    }
    if (e.embedding) j["embedding"] = *e.embedding;
    if (e.n_inclusion) j["n_inclusion"] = *e.n_inclusion;
    if (e.n_exclusion) j["n_exclusion"] = *e.n_exclusion;
    return j;
}

namespace {

std::string required_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw ValidationError(std::string("missing or non-string field '") + key + "'");
    }
    return j[key].get<std::string>();
}

std::size_t whitespace_words(const std::string& s) {
    std::istringstream in(s);
    std::size_t n = 0;
    for (std::string w; in >> w;) ++n;
    return n;
}

}  // namespace

KBEntry kb_entry_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("record is not an object");
    KBEntry e;
    e.id = required_string(j, "id");
    if (e.id.empty()) throw ValidationError("empty id");
    auto kind = parse_kb_kind(required_string(j, "kind"));
    if (!kind) throw ValidationError("unknown kind '" + j["kind"].get<std::string>() + "'");
    e.kind = *kind;
    e.natural_text = required_string(j, "natural_text");
    if (text::trim(e.natural_text).empty()) throw ValidationError("empty natural_text");
    e.sql = required_string(j, "sql");
    if (text::trim(e.sql).empty()) throw ValidationError("empty sql");
    if (j.contains("entities")) {
        if (!j["entities"].is_array()) throw ValidationError("entities is not an array");
        for (const auto& s : j["entities"]) {
            EntitySpan span;
            if (!s.contains("start") || !s.contains("end") || !s["start"].is_number_unsigned() ||
                !s["end"].is_number_unsigned()) {
                throw ValidationError("entity span needs non-negative integer start/end");
            }
            span.start = s["start"].get<std::size_t>();
            span.end = s["end"].get<std::size_t>();
            span.text = required_string(s, "text");
            auto domain = parse_domain(required_string(s, "domain"));
            if (!domain) throw ValidationError("unknown entity domain '" + s["domain"].get<std::string>() + "'");
            span.domain = *domain;
            check_span(span, e.natural_text);
            e.entities.push_back(std::move(span));
        }
    }
    if (j.contains("masked_text") && j["masked_text"].is_string() &&
        !j["masked_text"].get<std::string>().empty()) {
        e.masked_text = j["masked_text"].get<std::string>();
    } else {
        e.masked_text = mask_entities(e.natural_text, e.entities);
    }
    if (j.contains("embedding") && !j["embedding"].is_null()) {
        if (!j["embedding"].is_array()) throw ValidationError("embedding is not an array");
        std::vector<double> v;
        double sq = 0.0;
        for (const auto& x : j["embedding"]) {
            if (!x.is_number()) throw ValidationError("embedding contains a non-number");
            v.push_back(x.get<double>());
            sq += v.back() * v.back();
        }
        if (v.empty() || std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
            throw ValidationError("embedding is not unit-norm");
        }
        e.embedding = std::move(v);
    }
    if (j.contains("n_inclusion") && j["n_inclusion"].is_number_integer()) e.n_inclusion = j["n_inclusion"].get<int>();
    if (j.contains("n_exclusion") && j["n_exclusion"].is_number_integer()) e.n_exclusion = j["n_exclusion"].get<int>();
    return e;
}

std::vector<KBEntry> parse_kb(std::string_view contents, KBKind kind) {
    std::vector<KBEntry> out;
    std::set<std::string> seen;
    std::size_t record = 0;
    std::istringstream in{std::string(contents)};
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        const std::size_t index = record++;
        KBEntry e;
        try {
            e = kb_entry_from_json(json::parse(line));
        } catch (const json::exception& ex) {
            throw LoadError(index, std::string("malformed JSON: ") + ex.what());
        } catch (const ValidationError& ex) {
            throw LoadError(index, ex.what());
        }
        if (e.kind != kind) {
            throw ValidationError("record " + std::to_string(index) + " (" + e.id + ") has kind " +
                                  std::string(kb_kind_name(e.kind)) + ", expected " +
                                  std::string(kb_kind_name(kind)));
        }
        if (!seen.insert(e.id).second) throw ValidationError("duplicate id '" + e.id + "'");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<KBEntry> load_kb(const std::string& path, KBKind kind) {
    return parse_kb(text::read_file(path), kind);
}

void save_kb(const std::string& path, const std::vector<KBEntry>& entries) {
    std::string out;
    for (const auto& e : entries) out += to_json(e).dump() + "\n";
    text::write_file(path, out);
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd r;
    if (values.empty()) return r;
    double sum = 0.0;
    for (double v : values) sum += v;
    r.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return r;
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return r;
}

KBStats kb_stats(const std::vector<KBEntry>& entries) {
    if (entries.empty()) throw ValidationError("kb_stats requires a nonempty entry list");
    KBStats s;
    s.kind = entries.front().kind;
    s.n_samples = static_cast<int>(entries.size());

    std::vector<double> text_chars, text_words, ents, incl, excl;
    std::vector<double> sql_chars, tables, joins, logical;
    int agg = 0, dt = 0, sub = 0;
    std::set<std::string> all_tables, all_columns, concepts;

    for (const auto& e : entries) {
        text_chars.push_back(static_cast<double>(text::utf8_length(e.natural_text)));
        text_words.push_back(static_cast<double>(whitespace_words(e.natural_text)));
        ents.push_back(static_cast<double>(e.entities.size()));
        if (e.n_inclusion) incl.push_back(*e.n_inclusion);
        if (e.n_exclusion) excl.push_back(*e.n_exclusion);
        for (const auto& span : e.entities) {
            concepts.insert(std::string(domain_label(span.domain)) + ":" + text::to_lower(span.text));
        }
        sql::SqlComplexity c;
        try {
            c = sql::analyze_sql(e.sql);
        } catch (const AnalysisError& ex) {
            s.failed_ids.push_back(e.id);
            s.failure_messages.push_back(e.id + ": " + ex.what());
            continue;
        }
        ++s.n_analyzed;
        sql_chars.push_back(c.char_length);
        tables.push_back(c.tables_referenced);
        joins.push_back(c.join_count);
        logical.push_back(c.logical_conditions);
        agg += c.has_aggregation;
        dt += c.has_datetime_ops;
        sub += c.has_subquery;
        all_tables.insert(c.tables.begin(), c.tables.end());
        all_columns.insert(c.columns.begin(), c.columns.end());
    }

    s.text_chars = mean_std(text_chars);
    s.text_words = mean_std(text_words);
    s.entities_per_entry = mean_std(ents);
    if (!incl.empty()) s.inclusion_criteria = mean_std(incl);
    if (!excl.empty()) s.exclusion_criteria = mean_std(excl);
    s.sql_chars = mean_std(sql_chars);
    s.tables_referenced = mean_std(tables);
    s.joins = mean_std(joins);
    s.logical_conditions = mean_std(logical);
    s.n_distinct_tables = static_cast<int>(all_tables.size());
    s.n_distinct_columns = static_cast<int>(all_columns.size());
    s.n_unique_concepts = static_cast<int>(concepts.size());
    if (s.n_analyzed > 0) {
        const double n = s.n_analyzed;
        s.pct_with_aggregation = 100.0 * agg / n;
        s.pct_with_datetime = 100.0 * dt / n;
        s.pct_with_subquery = 100.0 * sub / n;
    }
    return s;
}

namespace {

json ms(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

}  // namespace

json to_json(const KBStats& s) {
    json j;
    j["kind"] = kb_kind_name(s.kind);
    j["global"] = {{"n_samples", s.n_samples},
                   {"n_analyzed", s.n_analyzed},
                   {"n_distinct_tables", s.n_distinct_tables},
                   {"n_distinct_columns", s.n_distinct_columns},
                   {"n_unique_concepts", s.n_unique_concepts}};
    j["text"] = {{"chars", ms(s.text_chars)},
                 {"words", ms(s.text_words)},
                 {"entities_per_entry", ms(s.entities_per_entry)}};
    json crit = json::object();
    crit["inclusion"] = s.inclusion_criteria ? ms(*s.inclusion_criteria) : json(nullptr);
    crit["exclusion"] = s.exclusion_criteria ? ms(*s.exclusion_criteria) : json(nullptr);
    j["criteria"] = crit;
    j["sql"] = {{"chars", ms(s.sql_chars)},
                {"tables_referenced", ms(s.tables_referenced)},
                {"joins", ms(s.joins)},
                {"logical_conditions", ms(s.logical_conditions)},
                {"pct_with_aggregation", s.pct_with_aggregation},
                {"pct_with_datetime", s.pct_with_datetime},
                {"pct_with_subquery", s.pct_with_subquery}};
    j["failed_ids"] = s.failed_ids;
    j["failures"] = s.failure_messages;
    j["conventions"] = {
        {"tables_referenced", "distinct base tables per query; CTE names excluded"},
        {"joins", "explicit JOIN keywords plus comma-separated FROM items beyond the first"},
        {"logical_conditions", "AND/OR/NOT in WHERE/HAVING/QUALIFY/ON; BETWEEN-AND and IS NOT excluded"},
        {"unique_concepts", "distinct (domain, lowercased entity text) pairs over annotated spans"},
        {"std", "sample standard deviation (n-1)"}};
    return j;
}

}  // namespace epicohort
