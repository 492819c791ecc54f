#include "helpers.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/text.hpp"

#include <doctest.h>

#include <cmath>

using namespace epicohort;

namespace {

std::string record(const std::string& id, const std::string& sql, const std::string& kind = "ASK") {
    nlohmann::json j = {{"id", id}, {"kind", kind}, {"natural_text", "patients with asthma"}, {"sql", sql},
                        {"entities", {{{"start", 14}, {"end", 20}, {"text", "asthma"}, {"domain", "condition"}}}}};
    return j.dump();
}

}  // namespace

TEST_CASE("empty file gives an empty list") {
    testutil::TempDir dir;
    text::write_file(dir.file("empty.jsonl"), "");
    CHECK(load_kb(dir.file("empty.jsonl"), KBKind::Ask).empty());
}

TEST_CASE("masked text is derived from spans") {
    const auto entries = parse_kb(record("a", "SELECT 1") + "\n", KBKind::Ask);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].masked_text == "patients with CONDITION");
}

TEST_CASE("malformed record names its index") {
    const std::string contents = record("a", "SELECT 1") + "\n\n" + "{not json}\n";
    try {
        parse_kb(contents, KBKind::Ask);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(e.record_index() == 1);
    }
    const std::string missing = record("a", "SELECT 1") + "\n{\"id\":\"b\",\"kind\":\"ASK\"}\n";
    CHECK_THROWS_AS(parse_kb(missing, KBKind::Ask), LoadError);
}

TEST_CASE("duplicate ids and kind mismatches are rejected") {
    CHECK_THROWS_AS(parse_kb(record("a", "SELECT 1") + "\n" + record("a", "SELECT 2"), KBKind::Ask),
                    ValidationError);
    CHECK_THROWS_AS(parse_kb(record("a", "SELECT 1", "COHO"), KBKind::Ask), ValidationError);
}

TEST_CASE("save and load round trip") {
    testutil::TempDir dir;
    const auto entries = parse_kb(record("a", "SELECT 1") + "\n" + record("b", "SELECT 2"), KBKind::Ask);
    save_kb(dir.file("kb.jsonl"), entries);
    const auto again = load_kb(dir.file("kb.jsonl"), KBKind::Ask);
    REQUIRE(again.size() == 2);
    CHECK(again[1].id == "b");
    CHECK(again[1].entities == entries[1].entities);
}

TEST_CASE("singleton stats have zero variance") {
    const auto entries = parse_kb(record("a", "SELECT COUNT(*) FROM person"), KBKind::Ask);
    const auto s = kb_stats(entries);
    CHECK(s.n_samples == 1);
    CHECK(s.joins.mean == 0.0);
    CHECK(s.joins.std == 0.0);
    CHECK(s.tables_referenced.std == 0.0);
    CHECK(s.logical_conditions.std == 0.0);
    CHECK(s.pct_with_aggregation == 100.0);
}

TEST_CASE("two entries with 1 and 3 joins") {
    const auto entries = parse_kb(
        record("a", "SELECT 1 FROM person p JOIN visit_occurrence v ON p.person_id = v.person_id") + "\n" +
            record("b",
                   "SELECT 1 FROM person p JOIN visit_occurrence v ON p.person_id = v.person_id "
                   "JOIN drug_exposure d ON d.person_id = p.person_id JOIN measurement m ON m.person_id = p.person_id"),
        KBKind::Ask);
    const auto s = kb_stats(entries);
    CHECK(s.joins.mean == doctest::Approx(2.0));
    // Deviations are +-1, so the n-1 convention gives sqrt(2 / 1).
    CHECK(s.joins.std == doctest::Approx(std::sqrt(2.0)));
    CHECK(s.pct_with_aggregation == 0.0);
}

TEST_CASE("mean_std uses the sample convention") {
    const auto m = mean_std({2, 4, 4, 4, 5, 5, 7, 9});
    CHECK(m.mean == doctest::Approx(5.0));
    CHECK(m.std == doctest::Approx(std::sqrt(32.0 / 7.0)));
}

TEST_CASE("unanalyzable SQL is reported, not counted") {
    const auto entries = parse_kb(record("a", "SELECT 1") + "\n" + record("b", "SELECT 'oops"), KBKind::Ask);
    const auto s = kb_stats(entries);
    CHECK(s.n_samples == 2);
    CHECK(s.n_analyzed == 1);
    CHECK(s.failed_ids == std::vector<std::string>{"b"});
    CHECK_THROWS_AS(kb_stats({}), ValidationError);
}

TEST_CASE("fixture KBs analyze fully") {
    const auto ask = load_kb(testutil::data_path("kb/ask_fixture.jsonl"), KBKind::Ask);
    const auto coho = load_kb(testutil::data_path("kb/coho_fixture.jsonl"), KBKind::Coho);
    CHECK(kb_stats(ask).n_analyzed == static_cast<int>(ask.size()));
    CHECK(kb_stats(coho).n_analyzed == static_cast<int>(coho.size()));
}
