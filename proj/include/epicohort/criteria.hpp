#pragma once

#include "epicohort/llm.hpp"
#include "epicohort/types.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

class EntityDetector;

struct Criterion {
    std::string id;  // "inc-1", "exc-2", ...
    std::string text;
    std::vector<EntitySpan> entities;

    bool operator==(const Criterion&) const = default;
};

struct CohortCriteria {
    std::vector<Criterion> inclusion;
    std::vector<Criterion> exclusion;
    std::string index_date_rule;

    bool operator==(const CohortCriteria&) const = default;
};

// Canonical structured text form:
//
//   Index date: <rule>
//   Inclusion:
//   - <criterion>
//   Exclusion:
//   - <criterion>
//
// Headings are case-insensitive and may appear in any order; the rule may
// also start on the line after its heading. Bullets are "-" or "*"; indented
// non-bullet lines continue the previous bullet. The Exclusion section is
// optional. Ids are assigned as inc-N / exc-N in source order.
std::string serialize_criteria(const CohortCriteria& c);

// Throws ParseError naming the offending line.
CohortCriteria parse_structured_criteria(std::string_view raw);

class CriteriaParser {
public:
    virtual ~CriteriaParser() = default;
    virtual CohortCriteria parse(std::string_view raw) = 0;
};

class StructuredCriteriaParser : public CriteriaParser {
public:
    CohortCriteria parse(std::string_view raw) override { return parse_structured_criteria(raw); }
};

// Sends free text to an LLM that answers in the structured text form. A
// nonconforming reply gets one reformat request carrying the parse error;
// a second failure raises SchemaError.
class LlmCriteriaParser : public CriteriaParser {
public:
    explicit LlmCriteriaParser(LlmProvider& llm) : llm_(llm) {}
    CohortCriteria parse(std::string_view raw) override;

private:
    LlmProvider& llm_;
};

// Runs `parser` and validates the result. Entities are detected per
// criterion when a detector is supplied. Throws ParseError for empty input,
// a missing index date rule or an invalid result.
CohortCriteria parse_criteria(std::string_view raw, CriteriaParser& parser,
                              EntityDetector* detector = nullptr);

// True when the text carries an "Index date:" heading line.
bool looks_structured(std::string_view raw);

// Empty iff the criteria are valid.
std::vector<std::string> validate_criteria(const CohortCriteria& c);

nlohmann::json to_json(const CohortCriteria& c);
// Throws RequestError with field diagnostics.
CohortCriteria criteria_from_json(const nlohmann::json& j);

}  // namespace epicohort
