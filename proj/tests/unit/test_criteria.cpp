#include "epicohort/criteria.hpp"
#include "epicohort/errors.hpp"
#include "epicohort/llm.hpp"
#include "epicohort/retrieval.hpp"

#include <doctest.h>

using namespace epicohort;

TEST_CASE("structured input with 2 inclusions and 1 exclusion") {
    const auto c = parse_structured_criteria(
        "Index date: first diagnosis of type 2 diabetes\n"
        "Inclusion:\n"
        "- age 18 or older\n"
        "- at least one HbA1c measurement\n"
        "Exclusion:\n"
        "- type 1 diabetes\n");
    REQUIRE(c.inclusion.size() == 2);
    REQUIRE(c.exclusion.size() == 1);
    CHECK(c.index_date_rule == "first diagnosis of type 2 diabetes");
    CHECK(c.inclusion[0].id == "inc-1");
    CHECK(c.inclusion[1].text == "at least one HbA1c measurement");
    CHECK(c.exclusion[0].id == "exc-1");
}

TEST_CASE("minimal input") {
    const auto c = parse_structured_criteria("index date:\n  first visit\ninclusion:\n* any visit\n");
    CHECK(c.inclusion.size() == 1);
    CHECK(c.exclusion.empty());
    CHECK(c.index_date_rule == "first visit");
}

TEST_CASE("continuation lines and section order") {
    const auto c = parse_structured_criteria(
        "Exclusion:\n- pregnancy\nInclusion:\n- statin use\n  for 90 days\nIndex date: first statin\n");
    REQUIRE(c.inclusion.size() == 1);
    CHECK(c.inclusion[0].text == "statin use for 90 days");
    CHECK(c.exclusion[0].text == "pregnancy");
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse_structured_criteria("Inclusion:\n- a\n"), ParseError);
    CHECK_THROWS_AS(parse_structured_criteria("Index date: x\nInclusion:\nnot a bullet\n"), ParseError);
    StructuredCriteriaParser p;
    CHECK_THROWS_AS(parse_criteria("   \n", p), ParseError);
}

TEST_CASE("serialize then parse round trips") {
    CohortCriteria c;
    c.index_date_rule = "first metformin exposure";
    c.inclusion = {{"inc-1", "age over 40", {}}, {"inc-2", "two visits in the prior year", {}}};
    c.exclusion = {{"exc-1", "chronic kidney disease", {}}, {"exc-2", "insulin before index", {}}};
    CHECK(parse_structured_criteria(serialize_criteria(c)) == c);
    CHECK(looks_structured(serialize_criteria(c)));
    CHECK_FALSE(looks_structured("patients with asthma"));
}

TEST_CASE("validate_criteria reports") {
    CohortCriteria c;
    c.index_date_rule = "x";
    c.inclusion = {{"inc-1", "a", {}}};
    CHECK(validate_criteria(c).empty());

    CohortCriteria empty_inc = c;
    empty_inc.inclusion.clear();
    CHECK(validate_criteria(empty_inc) == std::vector<std::string>{"inclusion nonempty"});

    CohortCriteria dup = c;
    dup.exclusion = {{"inc-1", "b", {}}};
    const auto report = validate_criteria(dup);
    REQUIRE(report.size() == 1);
    CHECK(report[0].find("inc-1") != std::string::npos);
}

TEST_CASE("detector fills entities during parse") {
    DictionaryEntityDetector det({{"asthma", Domain::Condition}});
    StructuredCriteriaParser p;
    const auto c = parse_criteria("Index date: first visit\nInclusion:\n- asthma diagnosis\n", p, &det);
    REQUIRE(c.inclusion[0].entities.size() == 1);
    CHECK(c.inclusion[0].entities[0].text == "asthma");
}

TEST_CASE("LLM parser retries once then raises SchemaError") {
    int calls = 0;
    FunctionLlmProvider bad([&](const LlmRequest&) {
        ++calls;
        return std::string("I think the criteria are about diabetes.");
    });
    LlmCriteriaParser p(bad);
    CHECK_THROWS_AS(p.parse("adults with diabetes"), SchemaError);
    CHECK(calls == 2);

    int calls2 = 0;
    FunctionLlmProvider fixes([&](const LlmRequest& req) {
        ++calls2;
        if (req.messages.size() == 1) return std::string("nope");
        return std::string("```\nIndex date: first diagnosis\nInclusion:\n- diabetes\n```");
    });
    LlmCriteriaParser p2(fixes);
    const auto c = p2.parse("adults with diabetes");
    CHECK(calls2 == 2);
    CHECK(c.inclusion.size() == 1);
}

TEST_CASE("criteria JSON round trip and request errors") {
    CohortCriteria c;
    c.index_date_rule = "x";
    c.inclusion = {{"inc-1", "a", {}}};
    c.exclusion = {{"exc-1", "b", {}}};
    CHECK(criteria_from_json(to_json(c)) == c);
    CHECK_THROWS_AS(criteria_from_json(nlohmann::json::object()), RequestError);
}
