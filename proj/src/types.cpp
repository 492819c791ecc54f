#include "epicohort/types.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <charconv>
#include <cstdio>

namespace epicohort {

std::string_view domain_label(Domain d) {
    switch (d) {
        case Domain::Condition: return "CONDITION";
        case Domain::Drug: return "DRUG";
        case Domain::Procedure: return "PROCEDURE";
        case Domain::Measurement: return "MEASUREMENT";
        case Domain::Observation: return "OBSERVATION";
        case Domain::Device: return "DEVICE";
        case Domain::Visit: return "VISIT";
    }
    return "UNKNOWN";
}

std::string_view domain_surface(Domain d) {
    switch (d) {
        case Domain::Condition: return "condition";
        case Domain::Drug: return "drug";
        case Domain::Procedure: return "procedure";
        case Domain::Measurement: return "measurement";
        case Domain::Observation: return "observation";
        case Domain::Device: return "device";
        case Domain::Visit: return "visit";
    }
    return "unknown";
}

std::optional<Domain> parse_domain(std::string_view s) {
    const auto lower = text::to_lower(text::trim(s));
    for (Domain d : kAllDomains) {
        if (lower == domain_surface(d)) return d;
    }
    return std::nullopt;
}

void check_span(const EntitySpan& span, std::string_view source) {
    if (span.start >= span.end || span.end > source.size()) {
        throw ValidationError("entity span [" + std::to_string(span.start) + ", " +
                              std::to_string(span.end) + ") out of range for text of length " +
                              std::to_string(source.size()));
    }
    if (source.substr(span.start, span.end - span.start) != span.text) {
        throw ValidationError("entity span text '" + span.text +
                              "' does not match source substring at " +
                              std::to_string(span.start));
    }
}

std::optional<Date> parse_iso_date(std::string_view s) {
    s = text::trim(s);
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto ok = [](std::string_view part, auto& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && p == part.data() + part.size();
    };
    if (!ok(s.substr(0, 4), y) || !ok(s.substr(5, 2), m) || !ok(s.substr(8, 2), d)) {
        return std::nullopt;
    }
    if (s.size() > 10 && s[10] != ' ' && s[10] != 'T') return std::nullopt;
    Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string format_iso_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

long days_between(const Date& a, const Date& b) {
    return static_cast<long>((std::chrono::sys_days{b} - std::chrono::sys_days{a}).count());
}

}  // namespace epicohort
