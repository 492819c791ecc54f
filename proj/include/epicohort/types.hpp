#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

// OMOP clinical domains used both for entity masking and for placeholders.
enum class Domain { Condition, Drug, Procedure, Measurement, Observation, Device, Visit };

inline constexpr Domain kAllDomains[] = {Domain::Condition,   Domain::Drug,        Domain::Procedure,
                                         Domain::Measurement, Domain::Observation, Domain::Device,
                                         Domain::Visit};

// "CONDITION", the label substituted by entity masking.
std::string_view domain_label(Domain d);
// "condition", the surface form inside `[condition@term]`.
std::string_view domain_surface(Domain d);
// Case-insensitive; accepts labels, surface forms and OMOP domain_id values.
std::optional<Domain> parse_domain(std::string_view s);

struct EntitySpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string text;
    Domain domain = Domain::Condition;

    bool operator==(const EntitySpan&) const = default;
};

// Throws ValidationError if the span is out of range or its text does not
// match the source substring.
void check_span(const EntitySpan& span, std::string_view source);

using Date = std::chrono::year_month_day;

// Accepts "YYYY-MM-DD" optionally followed by a time part.
std::optional<Date> parse_iso_date(std::string_view s);
std::string format_iso_date(const Date& d);
// b - a in days.
long days_between(const Date& a, const Date& b);

}  // namespace epicohort
