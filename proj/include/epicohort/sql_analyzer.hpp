#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort::sql {

enum class TokenKind {
    Word,              // identifier or keyword
    QuotedIdentifier,  // "x", `x`, [x]
    String,            // 'x'
    Number,
    Placeholder,       // [domain@term], treated as a literal
    Operator,
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
    End,
};

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;   // raw text (quotes stripped for quoted identifiers and strings)
    std::string upper;  // uppercase of `text` for words
    std::size_t offset = 0;
};

// Throws AnalysisError on unterminated strings, comments or brackets.
std::vector<Token> tokenize(std::string_view sql);

// Structural complexity of one SQL statement.
//
// Counting conventions:
//  - tables_referenced: distinct base tables in FROM/JOIN positions (names
//    lowercased, schema qualifiers dropped, CTE names excluded).
//    table_reference_total counts every FROM/JOIN reference including repeats
//    and CTE references.
//  - join_count: explicit JOIN keywords plus comma-separated FROM items
//    beyond the first in each FROM clause.
//  - logical_conditions: AND/OR/NOT tokens inside WHERE, HAVING, QUALIFY and
//    ON clauses at any nesting depth. The AND of BETWEEN and the NOT of
//    IS NOT are comparison syntax and are not counted.
//  - has_aggregation: COUNT/SUM/AVG/MIN/MAX call.
//  - has_datetime_ops: a date/time function call, CURRENT_DATE-style
//    keyword, DATE/TIMESTAMP/INTERVAL literal, cast to a date type, or a
//    date-shaped string literal.
//  - has_subquery: a parenthesised SELECT/WITH anywhere, CTE bodies included.
//  - char_length: UTF-8 code points of the statement.
struct SqlComplexity {
    int tables_referenced = 0;
    int table_reference_total = 0;
    int join_count = 0;
    int logical_conditions = 0;
    bool has_aggregation = false;
    bool has_datetime_ops = false;
    bool has_subquery = false;
    int char_length = 0;
    std::set<std::string> tables;
    std::set<std::string> columns;

    bool operator==(const SqlComplexity&) const = default;
};

// Throws AnalysisError when the statement does not parse.
SqlComplexity analyze_sql(std::string_view sql);

// True iff analyze_sql would succeed.
bool parses(std::string_view sql);

}  // namespace epicohort::sql
