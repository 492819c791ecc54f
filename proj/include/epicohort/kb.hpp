#pragma once

#include "epicohort/sql_analyzer.hpp"
#include "epicohort/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

enum class KBKind { Ask, Coho };

std::string_view kb_kind_name(KBKind kind);  // "ASK" / "COHO"
std::optional<KBKind> parse_kb_kind(std::string_view s);

// One exemplar: a question (ASK) or full cohort criteria (COHO) with its
// reference SQL.
struct KBEntry {
    std::string id;
    KBKind kind = KBKind::Ask;
    std::string natural_text;
    std::string masked_text;
    std::string sql;
    std::vector<EntitySpan> entities;
    std::optional<std::vector<double>> embedding;
    // Optional curation annotations for COHO entries.
    std::optional<int> n_inclusion;
    std::optional<int> n_exclusion;
};

nlohmann::json to_json(const KBEntry& e);

// Parses one record. Throws ValidationError on schema violations.
KBEntry kb_entry_from_json(const nlohmann::json& j);

// Reads a line-delimited KB file. Blank lines are skipped. Entries without a
// masked_text get one computed from their entity spans.
// Throws LoadError (naming the 0-based record index) for malformed records
// and ValidationError for duplicate ids or a kind mismatch.
std::vector<KBEntry> load_kb(const std::string& path, KBKind kind);
std::vector<KBEntry> parse_kb(std::string_view contents, KBKind kind);

void save_kb(const std::string& path, const std::vector<KBEntry>& entries);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n-1); 0 for n < 2
};

MeanStd mean_std(const std::vector<double>& values);

struct KBStats {
    KBKind kind = KBKind::Ask;
    int n_samples = 0;
    int n_analyzed = 0;
    int n_distinct_tables = 0;
    int n_distinct_columns = 0;
    int n_unique_concepts = 0;

    MeanStd text_chars;
    MeanStd text_words;
    MeanStd entities_per_entry;
    std::optional<MeanStd> inclusion_criteria;
    std::optional<MeanStd> exclusion_criteria;

    MeanStd sql_chars;
    MeanStd tables_referenced;
    MeanStd joins;
    MeanStd logical_conditions;

    double pct_with_aggregation = 0.0;
    double pct_with_datetime = 0.0;
    double pct_with_subquery = 0.0;

    std::vector<std::string> failed_ids;
    std::vector<std::string> failure_messages;
};

// Per-sample means/stds over analyze_sql results. Entries whose SQL does not
// analyze are excluded from the SQL statistics and listed in failed_ids.
// Throws ValidationError on an empty list.
KBStats kb_stats(const std::vector<KBEntry>& entries);

nlohmann::json to_json(const KBStats& stats);

}  // namespace epicohort
