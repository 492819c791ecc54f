#include "helpers.hpp"

#include "epicohort/backend.hpp"
#include "epicohort/cohort.hpp"
#include "epicohort/errors.hpp"
#include "epicohort/synthetic.hpp"
#include "epicohort/text.hpp"

#include <doctest.h>

#include <map>

using namespace epicohort;

namespace {

SyntheticDbSpec small_spec(std::uint64_t seed = 5, int n = 100) {
    SyntheticDbSpec s;
    s.seed = seed;
    s.n_persons = n;
    return s;
}

std::int64_t count(SqlBackend& db, const std::string& sql) {
    return std::get<std::int64_t>(db.execute(sql).rows.at(0).at(0));
}

}  // namespace

TEST_CASE("same seed gives identical tables") {
    SqliteBackend a(":memory:"), b(":memory:"), c(":memory:");
    generate_synthetic_omop(small_spec(5), a);
    generate_synthetic_omop(small_spec(5), b);
    generate_synthetic_omop(small_spec(6), c);
    const auto da = dump_tables(a);
    CHECK(da == dump_tables(b));
    CHECK(da != dump_tables(c));
}

TEST_CASE("person count and table set") {
    SqliteBackend db(":memory:");
    generate_synthetic_omop(small_spec(1, 100), db);
    CHECK(count(db, "SELECT COUNT(*) FROM person") == 100);
    for (const auto& t : omop_tables()) CHECK_NOTHROW(db.execute("SELECT * FROM " + t + " LIMIT 1"));
    CHECK(count(db, "SELECT COUNT(*) FROM observation_period") == 100);
}

TEST_CASE("referential integrity over several seeds") {
    for (std::uint64_t seed : {1u, 2u, 3u, 42u}) {
        SqliteBackend db(":memory:");
        generate_synthetic_omop(small_spec(seed, 150), db);
        for (const std::string t : {"condition_occurrence", "drug_exposure", "drug_era", "procedure_occurrence",
                                    "visit_occurrence", "measurement", "observation_period"}) {
            const auto rows = db.execute("SELECT person_id FROM " + t);
            const auto persons = db.execute("SELECT person_id FROM person");
            std::set<std::int64_t> ids;
            for (const auto& r : persons.rows) ids.insert(std::get<std::int64_t>(r[0]));
            for (const auto& r : rows.rows) CHECK(ids.count(std::get<std::int64_t>(r[0])) == 1);
        }
        CHECK(count(db, "SELECT COUNT(*) FROM condition_occurrence c LEFT JOIN concept k "
                        "ON k.concept_id = c.condition_concept_id WHERE k.concept_id IS NULL") == 0);
        CHECK(count(db, "SELECT COUNT(*) FROM drug_exposure d LEFT JOIN concept k "
                        "ON k.concept_id = d.drug_concept_id WHERE k.concept_id IS NULL") == 0);
        CHECK(count(db, "SELECT COUNT(*) FROM visit_occurrence v LEFT JOIN provider p "
                        "ON p.provider_id = v.provider_id WHERE v.provider_id IS NOT NULL AND p.provider_id IS NULL") ==
              0);
        // Events fall inside the person's observation period.
        CHECK(count(db, "SELECT COUNT(*) FROM condition_occurrence c JOIN observation_period o "
                        "ON o.person_id = c.person_id WHERE c.condition_start_date < o.observation_period_start_date "
                        "OR c.condition_start_date > o.observation_period_end_date") == 0);
    }
}

TEST_CASE("catalogue matches the shipped vocabulary file") {
    const auto rows = text::parse_delimited(text::read_file(testutil::data_path("vocab/CONCEPT.csv")));
    const auto& catalog = synthetic_concept_catalog();
    REQUIRE(rows.size() == catalog.size() + 1);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        CHECK(std::stoll(rows[i + 1][0]) == catalog[i].concept_id);
        CHECK(rows[i + 1][1] == catalog[i].name);
        CHECK(rows[i + 1][2] == catalog[i].domain_id);
    }
}

TEST_CASE("first-diagnosis query matches a recount from raw rows") {
    SqliteBackend db(":memory:");
    generate_synthetic_omop(small_spec(9, 200), db);
    const std::string q =
        "SELECT person_id, MIN(condition_start_date) AS index_date FROM condition_occurrence GROUP BY person_id";
    const auto first = cohort_from_rows(db.execute(q));
    CHECK(first == cohort_from_rows(db.execute(q)));

    std::map<std::int64_t, Date> oracle;
    for (const auto& r : db.execute("SELECT person_id, condition_start_date FROM condition_occurrence").rows) {
        const auto pid = std::get<std::int64_t>(r[0]);
        const auto d = *parse_iso_date(std::get<std::string>(r[1]));
        auto it = oracle.find(pid);
        if (it == oracle.end() || d < it->second) oracle[pid] = d;
    }
    CHECK(first.rows == oracle);
}

TEST_CASE("spec validation") {
    auto s = small_spec();
    s.n_persons = 0;
    CHECK_THROWS_AS(validate_spec(s), ValidationError);
    s = small_spec();
    s.end = testutil::add_days(s.start, -1);
    CHECK_THROWS_AS(validate_spec(s), ValidationError);
}

TEST_CASE("backend errors and guards") {
    SqliteBackend db(":memory:");
    try {
        db.execute("SELECT FROMM x");
        FAIL("expected ExecutionError");
    } catch (const ExecutionError& e) {
        CHECK_FALSE(e.diagnostic().empty());
    }
    db.execute_script("CREATE TABLE t(person_id INTEGER, index_date TEXT);");
    CHECK(db.execute("SELECT * FROM t").empty());
    CHECK_THROWS_AS(db.execute("DROP TABLE t"), ExecutionError);
    CHECK_THROWS_AS(db.execute("SELECT 1; SELECT 2"), ExecutionError);
}
