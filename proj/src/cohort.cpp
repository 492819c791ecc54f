#include "epicohort/cohort.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace epicohort {

PersonSet Cohort::person_ids() const {
    PersonSet out;
    for (const auto& [id, _] : rows) out.insert(out.end(), id);
    return out;
}

namespace {

std::int64_t to_person_id(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* d = std::get_if<double>(&v)) {
        if (std::floor(*d) == *d) return static_cast<std::int64_t>(*d);
    }
    if (const auto* s = std::get_if<std::string>(&v)) {
        std::int64_t out = 0;
        const auto t = text::trim(*s);
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
        if (ec == std::errc{} && p == t.data() + t.size()) return out;
    }
    throw ShapeError("person_id value '" + value_to_string(v) + "' is not an integer");
}

Date to_date(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) {
        if (auto d = parse_iso_date(*s)) return *d;
    }
    throw ShapeError("index_date value '" + value_to_string(v) + "' is not an ISO-8601 date");
}

}  // namespace

Cohort cohort_from_rows(const RowSet& rows) {
    const auto pid = rows.column_index("person_id");
    const auto idx = rows.column_index("index_date");
    if (!pid || !idx) throw ShapeError("cohort queries must return person_id and index_date columns");
    Cohort c;
    for (const auto& row : rows.rows) {
        const auto id = to_person_id(row[*pid]);
        const auto date = to_date(row[*idx]);
        auto [it, inserted] = c.rows.emplace(id, date);
        if (!inserted && date < it->second) it->second = date;
    }
    return c;
}

PersonSet person_set_from_rows(const RowSet& rows) {
    const auto pid = rows.column_index("person_id");
    if (!pid) throw ShapeError("criterion queries must return a person_id column");
    PersonSet out;
    for (const auto& row : rows.rows) out.insert(to_person_id(row[*pid]));
    return out;
}

std::string cohort_to_csv(const Cohort& c) {
    std::string out = "person_id,index_date\n";
    for (const auto& [id, date] : c.rows) out += std::to_string(id) + "," + format_iso_date(date) + "\n";
    return out;
}

Cohort cohort_from_csv(std::string_view csv) {
    auto rows = text::parse_delimited(csv);
    if (rows.empty()) throw ShapeError("cohort file is empty");
    RowSet rs;
    rs.columns = rows.front();
    for (auto& col : rs.columns) col = std::string(text::trim(col));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<Value> r;
        for (auto& f : rows[i]) r.emplace_back(std::string(text::trim(f)));
        if (r.size() != rs.columns.size()) throw ShapeError("cohort file row " + std::to_string(i + 1) + " has wrong width");
        rs.rows.push_back(std::move(r));
    }
    return cohort_from_rows(rs);
}

std::string_view step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::Index: return "INDEX";
        case StepKind::Inclusion: return "INCLUSION";
        case StepKind::Exclusion: return "EXCLUSION";
    }
    return "INDEX";
}

Funnel compute_funnel(const Cohort& index_cohort, const std::vector<CriterionCohort>& criteria,
                      const std::string& index_sql) {
    Funnel f;
    f.steps.push_back({0, "index", StepKind::Index, index_sql, index_cohort.size()});
    PersonSet remaining = index_cohort.person_ids();
    int step = 1;
    for (const auto& c : criteria) {
        PersonSet next;
        if (c.kind == StepKind::Inclusion) {
            std::set_intersection(remaining.begin(), remaining.end(), c.persons.begin(), c.persons.end(),
                                  std::inserter(next, next.end()));
        } else if (c.kind == StepKind::Exclusion) {
            std::set_difference(remaining.begin(), remaining.end(), c.persons.begin(), c.persons.end(),
                                std::inserter(next, next.end()));
        } else {
            throw ValidationError("criterion " + c.criterion_id + " has kind INDEX; expected INCLUSION or EXCLUSION");
        }
        remaining = std::move(next);
        f.steps.push_back({step++, c.criterion_id, c.kind, c.sql, remaining.size()});
    }
    for (auto id : remaining) f.final_cohort.rows.emplace(id, index_cohort.rows.at(id));
    return f;
}

double funnel_similarity(const Cohort& a, const Cohort& b) {
    const auto lo = std::min(a.size(), b.size());
    const auto hi = std::max(a.size(), b.size());
    if (hi == 0) return 1.0;
    return static_cast<double>(lo) / static_cast<double>(hi);
}

nlohmann::json to_json(const Funnel& f) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : f.steps) {
        steps.push_back({{"step_index", s.step_index},
                         {"criterion_id", s.criterion_id},
                         {"kind", step_kind_name(s.kind)},
                         {"remaining_count", s.remaining_count},
                         {"sql", s.sql}});
    }
    return {{"steps", steps}, {"final_count", f.final_cohort.size()}};
}

void materialize_index_cohort(SqlBackend& backend, const Cohort& cohort) {
    std::string script = "DROP TABLE IF EXISTS temp.index_cohort;\n"
                         "CREATE TEMP TABLE index_cohort (person_id INTEGER PRIMARY KEY, index_date TEXT NOT NULL);\n";
    if (!cohort.empty()) {
        script += "INSERT INTO index_cohort (person_id, index_date) VALUES ";
        bool first = true;
        for (const auto& [id, date] : cohort.rows) {
            if (!first) script += ",";
            first = false;
            script += "(" + std::to_string(id) + ",'" + format_iso_date(date) + "')";
        }
        script += ";\n";
    }
    backend.execute_script(script);
}

}  // namespace epicohort
