#pragma once

#include "epicohort/types.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

// `[domain@term]` token deferring medical coding to normalization.
struct Placeholder {
    Domain domain = Domain::Condition;
    std::string term;
    std::size_t begin = 0;  // offset of '['
    std::size_t end = 0;    // one past ']'

    std::string surface() const;  // "[condition@hypertension]"
    bool operator==(const Placeholder&) const = default;
};

// Grammar, scanned left to right:
//   placeholder := '[' domain '@' term ']'
//   domain      := one of the lowercase domain surface forms (matched
//                  case-insensitively)
//   term        := one or more characters other than '[' ']' and newline
// Bracketed text without '@' (e.g. a bracket-quoted identifier) is not a
// placeholder. Bracketed text containing '@' that violates the grammar, or
// an unclosed '[' followed by `word@`, throws GrammarError naming the span.
std::vector<Placeholder> parse_placeholders(std::string_view sql);

// Substitutes each placeholder with `replacement(p)`; all other bytes are
// copied unchanged.
template <typename Fn>
std::string substitute_placeholders(std::string_view sql, const std::vector<Placeholder>& placeholders,
                                    Fn&& replacement) {
    std::string out;
    std::size_t cursor = 0;
    for (const auto& p : placeholders) {
        out.append(sql.substr(cursor, p.begin - cursor));
        out += replacement(p);
        cursor = p.end;
    }
    out.append(sql.substr(cursor));
    return out;
}

}  // namespace epicohort
