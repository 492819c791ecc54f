#pragma once

#include "epicohort/backend.hpp"
#include "epicohort/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

using PersonSet = std::set<std::int64_t>;

// person_id -> index_date, one date per person.
struct Cohort {
    std::map<std::int64_t, Date> rows;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    PersonSet person_ids() const;
    bool operator==(const Cohort&) const = default;
};

// Requires person_id and index_date columns (case-insensitive); throws
// ShapeError otherwise or on unparseable values. A person listed more than
// once keeps the earliest date.
Cohort cohort_from_rows(const RowSet& rows);
// Requires a person_id column.
PersonSet person_set_from_rows(const RowSet& rows);

// Delimited cohort file: header `person_id,index_date`, ISO-8601 dates,
// rows in ascending person_id order.
std::string cohort_to_csv(const Cohort& c);
Cohort cohort_from_csv(std::string_view csv);

enum class StepKind { Index, Inclusion, Exclusion };
std::string_view step_kind_name(StepKind k);  // "INDEX", "INCLUSION", "EXCLUSION"

struct FunnelStep {
    int step_index = 0;
    std::string criterion_id;
    StepKind kind = StepKind::Index;
    std::string sql;
    std::size_t remaining_count = 0;
};

struct Funnel {
    std::vector<FunnelStep> steps;
    Cohort final_cohort;
};

struct CriterionCohort {
    std::string criterion_id;
    StepKind kind = StepKind::Inclusion;
    PersonSet persons;
    std::string sql;
};

// Step 0 is the index cohort. Each INCLUSION step intersects, each
// EXCLUSION step subtracts, in the given order. Index dates always come from
// the index cohort. Throws ValidationError if a criterion has kind INDEX.
Funnel compute_funnel(const Cohort& index_cohort, const std::vector<CriterionCohort>& criteria,
                      const std::string& index_sql = "");

// min(|A|,|B|) / max(|A|,|B|); 1.0 when both are empty.
double funnel_similarity(const Cohort& funnel_final, const Cohort& monolithic);

nlohmann::json to_json(const Funnel& f);

// Name of the table that per-criterion funnel queries may reference.
inline constexpr const char* kIndexCohortTable = "index_cohort";

// Loads `cohort` into a temporary index_cohort(person_id, index_date) table
// on the backend's connection, replacing any previous contents.
void materialize_index_cohort(SqlBackend& backend, const Cohort& cohort);

}  // namespace epicohort
