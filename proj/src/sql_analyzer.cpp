#include "epicohort/sql_analyzer.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <cctype>
#include <unordered_set>

namespace epicohort::sql {

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::size_t scan_quoted(std::string_view sql, std::size_t i, char close, std::string& out,
                        const char* what) {
    const std::size_t start = i;
    ++i;
    while (i < sql.size()) {
        if (sql[i] == close) {
            if (i + 1 < sql.size() && sql[i + 1] == close && close != ']') {
                out.push_back(close);
                i += 2;
                continue;
            }
            return i + 1;
        }
        out.push_back(sql[i++]);
    }
    throw AnalysisError(std::string("unterminated ") + what, start);
}

}  // namespace

std::vector<Token> tokenize(std::string_view sql) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = sql.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(sql[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            auto end = sql.find("*/", i + 2);
            if (end == std::string_view::npos) throw AnalysisError("unterminated block comment", i);
            i = end + 2;
            continue;
        }
        Token tok;
        tok.offset = i;
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < n && is_ident_char(static_cast<unsigned char>(sql[j]))) ++j;
            tok.kind = TokenKind::Word;
            tok.text = std::string(sql.substr(i, j - i));
            tok.upper = text::to_upper(tok.text);
            i = j;
        } else if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            std::size_t j = i;
            while (j < n && (std::isdigit(static_cast<unsigned char>(sql[j])) || sql[j] == '.')) ++j;
            if (j < n && (sql[j] == 'e' || sql[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < n && (sql[k] == '+' || sql[k] == '-')) ++k;
                if (k < n && std::isdigit(static_cast<unsigned char>(sql[k]))) {
                    j = k;
                    while (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
                }
            }
            tok.kind = TokenKind::Number;
            tok.text = std::string(sql.substr(i, j - i));
            i = j;
        } else if (c == '\'') {
            tok.kind = TokenKind::String;
            i = scan_quoted(sql, i, '\'', tok.text, "string literal");
        } else if (c == '"') {
            tok.kind = TokenKind::QuotedIdentifier;
            i = scan_quoted(sql, i, '"', tok.text, "quoted identifier");
        } else if (c == '`') {
            tok.kind = TokenKind::QuotedIdentifier;
            i = scan_quoted(sql, i, '`', tok.text, "quoted identifier");
        } else if (c == '[') {
            i = scan_quoted(sql, i, ']', tok.text, "bracket");
            tok.kind = tok.text.find('@') != std::string::npos ? TokenKind::Placeholder
                                                               : TokenKind::QuotedIdentifier;
        } else if (c == '(') {
            tok.kind = TokenKind::LParen;
            tok.text = "(";
            ++i;
        } else if (c == ')') {
            tok.kind = TokenKind::RParen;
            tok.text = ")";
            ++i;
        } else if (c == ',') {
            tok.kind = TokenKind::Comma;
            tok.text = ",";
            ++i;
        } else if (c == '.') {
            tok.kind = TokenKind::Dot;
            tok.text = ".";
            ++i;
        } else if (c == ';') {
            tok.kind = TokenKind::Semicolon;
            tok.text = ";";
            ++i;
        } else {
            static const char* two_char[] = {"<=", ">=", "<>", "!=", "||", "::", "=>", "=="};
            tok.kind = TokenKind::Operator;
            bool matched = false;
            if (i + 1 < n) {
                for (const char* op : two_char) {
                    if (sql[i] == op[0] && sql[i + 1] == op[1]) {
                        tok.text = op;
                        i += 2;
                        matched = true;
                        break;
                    }
                }
            }
            if (!matched) {
                static const std::string_view singles = "+-*/%=<>!~^&|?:@#";
                if (singles.find(static_cast<char>(c)) == std::string_view::npos) {
                    throw AnalysisError(std::string("unexpected character '") + static_cast<char>(c) + "'", i);
                }
                tok.text = std::string(1, static_cast<char>(c));
                ++i;
            }
        }
        out.push_back(std::move(tok));
    }
    Token end;
    end.kind = TokenKind::End;
    end.offset = n;
    out.push_back(end);
    return out;
}

namespace {

const std::unordered_set<std::string> kAggregates = {"COUNT", "SUM", "AVG", "MIN", "MAX"};

const std::unordered_set<std::string> kDateFunctions = {
    "DATE",         "DATEADD",       "DATEDIFF",     "DATE_ADD",       "DATE_SUB",
    "DATE_DIFF",    "DATE_TRUNC",    "DATE_PART",    "DATEPART",       "DATEFROMPARTS",
    "DATE_FROM_PARTS", "JULIANDAY",  "STRFTIME",     "DATETIME",       "TIME",
    "TIMESTAMP",    "TIMESTAMPADD",  "TIMESTAMPDIFF", "TO_DATE",       "TO_TIMESTAMP",
    "ADD_MONTHS",   "MONTHS_BETWEEN", "EXTRACT",     "YEAR",           "MONTH",
    "DAY",          "LAST_DAY",      "GETDATE",      "NOW",            "UNIXEPOCH",
    "DAYOFYEAR",    "WEEK",          "QUARTER",      "DATEADD_DAYS"};

const std::unordered_set<std::string> kDateKeywords = {"CURRENT_DATE", "CURRENT_TIMESTAMP",
                                                       "SYSDATE", "LOCALTIMESTAMP"};

const std::unordered_set<std::string> kDateTypes = {"DATE", "TIMESTAMP", "DATETIME",
                                                    "TIMESTAMP_NTZ", "TIMESTAMP_LTZ", "TIME"};

// Keywords that end a FROM item (cannot be taken as an alias).
const std::unordered_set<std::string> kFromStop = {
    "WHERE",  "GROUP",  "HAVING",  "ORDER",    "LIMIT", "OFFSET",  "UNION", "INTERSECT",
    "EXCEPT", "MINUS",  "JOIN",    "INNER",    "LEFT",  "RIGHT",   "FULL",  "CROSS",
    "NATURAL", "ON",    "USING",   "QUALIFY",  "WINDOW", "FETCH",  "ASOF",  "SELECT",
    "FROM",   "OUTER",  "LATERAL", "AS",       "SAMPLE", "TABLESAMPLE"};

// Keywords that end an expression at paren depth zero.
const std::unordered_set<std::string> kClauseStop = {
    "FROM",  "WHERE", "GROUP",   "HAVING", "ORDER", "LIMIT", "OFFSET", "UNION",   "INTERSECT",
    "EXCEPT", "MINUS", "QUALIFY", "WINDOW", "FETCH", "JOIN",  "INNER",  "FULL",    "CROSS",
    "NATURAL", "USING", "ON",     "ASOF"};

const std::unordered_set<std::string> kNonColumnWords = {
    "SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "IN", "IS", "NULL", "AS", "ON", "JOIN",
    "LEFT", "RIGHT", "INNER", "OUTER", "FULL", "CROSS", "NATURAL", "USING", "GROUP", "BY",
    "ORDER", "HAVING", "LIMIT", "OFFSET", "UNION", "ALL", "DISTINCT", "INTERSECT", "EXCEPT",
    "MINUS", "CASE", "WHEN", "THEN", "ELSE", "END", "EXISTS", "BETWEEN", "LIKE", "ILIKE", "ASC",
    "DESC", "WITH", "RECURSIVE", "OVER", "PARTITION", "ROWS", "RANGE", "UNBOUNDED", "PRECEDING",
    "FOLLOWING", "CURRENT", "ROW", "TRUE", "FALSE", "INTERVAL", "DATE", "TIMESTAMP", "CAST",
    "FILTER", "QUALIFY", "WINDOW", "FETCH", "FIRST", "NEXT", "ONLY", "TOP", "LATERAL", "DAY",
    "DAYS", "MONTH", "MONTHS", "YEAR", "YEARS", "WEEK", "HOUR", "MINUTE", "SECOND", "INTEGER",
    "INT", "BIGINT", "REAL", "TEXT", "VARCHAR", "NUMERIC", "DECIMAL", "FLOAT", "DOUBLE",
    "BOOLEAN", "NULLS", "LAST", "ESCAPE", "COLLATE", "GLOB", "REGEXP", "ANY", "SOME",
    "CURRENT_DATE", "CURRENT_TIMESTAMP", "SYSDATE", "MATERIALIZED", "DATETIME", "TIME",
    "PRECISION", "ASOF", "MATCH_CONDITION", "ILIKE", "RLIKE", "SIMILAR", "TO", "ISNULL",
    "NOTNULL", "ESCAPE", "IGNORE", "RESPECT", "WITHIN", "QUARTER"};

enum class Ctx { Other, Predicate };

class Analyzer {
public:
    explicit Analyzer(std::string_view sql) : tokens_(tokenize(sql)) {
        result_.char_length = static_cast<int>(text::utf8_length(sql));
    }

    SqlComplexity run() {
        if (peek().kind == TokenKind::End) throw AnalysisError("empty statement", 0);
        statement();
        while (peek().kind == TokenKind::Semicolon) advance();
        if (peek().kind != TokenKind::End) {
            throw AnalysisError("unexpected token '" + peek().text + "' after statement",
                                peek().offset);
        }
        for (const auto& t : base_tables_) {
            if (!ctes_.count(t)) result_.tables.insert(t);
        }
        result_.tables_referenced = static_cast<int>(result_.tables.size());
        for (const auto& c : column_candidates_) {
            if (!aliases_.count(c) && !ctes_.count(c) && !base_tables_.count(c)) {
                result_.columns.insert(c);
            }
        }
        return result_;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        const std::size_t idx = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[idx];
    }
    const Token& advance() {
        const Token& t = tokens_[pos_];
        if (pos_ + 1 < tokens_.size()) ++pos_;
        return t;
    }
    bool is_word(const Token& t, std::string_view upper) const {
        return t.kind == TokenKind::Word && t.upper == upper;
    }
    bool accept_word(std::string_view upper) {
        if (is_word(peek(), upper)) {
            advance();
            return true;
        }
        return false;
    }
    void expect(TokenKind kind, const char* what) {
        if (peek().kind != kind) {
            throw AnalysisError(std::string("expected ") + what + " but found '" +
                                    (peek().kind == TokenKind::End ? "end of input" : peek().text) + "'",
                                peek().offset);
        }
        advance();
    }
    bool is_name(const Token& t) const {
        return t.kind == TokenKind::Word || t.kind == TokenKind::QuotedIdentifier;
    }

    // statement := [WITH cte {, cte}] query_expr [ORDER BY ...] [LIMIT ...]
    void statement() {
        if (accept_word("WITH")) {
            accept_word("RECURSIVE");
            do {
                if (!is_name(peek())) throw AnalysisError("expected CTE name", peek().offset);
                ctes_.insert(text::to_lower(advance().text));
                if (peek().kind == TokenKind::LParen) skip_parenthesised_names();
                if (!accept_word("AS")) throw AnalysisError("expected AS in CTE", peek().offset);
                accept_word("NOT");
                accept_word("MATERIALIZED");
                subquery_in_parens();
            } while (peek().kind == TokenKind::Comma && (advance(), true));
        }
        query_expr();
        trailing_clauses();
    }

    void trailing_clauses() {
        while (true) {
            if (is_word(peek(), "ORDER") && is_word(peek(1), "BY")) {
                advance();
                advance();
                expression(Ctx::Other, true);
            } else if (accept_word("LIMIT") || accept_word("OFFSET")) {
                expression(Ctx::Other, true);
            } else if (accept_word("FETCH")) {
                expression(Ctx::Other, false);
            } else {
                break;
            }
        }
    }

    void query_expr() {
        query_term();
        while (true) {
            if (accept_word("UNION") || accept_word("INTERSECT") || accept_word("EXCEPT") ||
                accept_word("MINUS")) {
                accept_word("ALL") || accept_word("DISTINCT");
                query_term();
            } else {
                break;
            }
        }
    }

    void query_term() {
        if (peek().kind == TokenKind::LParen) {
            advance();
            statement();
            expect(TokenKind::RParen, "')'");
            return;
        }
        select_core();
    }

    void select_core() {
        if (!accept_word("SELECT")) {
            throw AnalysisError("expected SELECT or WITH but found '" +
                                    (peek().kind == TokenKind::End ? "end of input" : peek().text) + "'",
                                peek().offset);
        }
        accept_word("DISTINCT") || accept_word("ALL");
        if (accept_word("TOP")) advance();
        expression(Ctx::Other, true, true);
        if (accept_word("FROM")) from_clause();
        if (accept_word("WHERE")) expression(Ctx::Predicate, false);
        if (is_word(peek(), "GROUP") && is_word(peek(1), "BY")) {
            advance();
            advance();
            expression(Ctx::Other, true);
        }
        if (accept_word("HAVING")) expression(Ctx::Predicate, false);
        if (accept_word("QUALIFY")) expression(Ctx::Predicate, false);
        if (accept_word("WINDOW")) expression(Ctx::Other, true);
    }

    void from_clause() {
        from_item();
        while (true) {
            if (peek().kind == TokenKind::Comma) {
                advance();
                ++result_.join_count;
                from_item();
            } else if (join_ahead()) {
                while (!is_word(peek(), "JOIN")) advance();
                advance();
                ++result_.join_count;
                from_item();
                if (accept_word("ON") || accept_word("MATCH_CONDITION")) {
                    expression(Ctx::Predicate, false);
                    if (accept_word("ON")) expression(Ctx::Predicate, false);
                } else if (accept_word("USING")) {
                    if (peek().kind != TokenKind::LParen) throw AnalysisError("expected '(' after USING", peek().offset);
                    skip_parenthesised_names();
                }
            } else {
                break;
            }
        }
    }

    bool join_ahead() const {
        for (std::size_t k = 0; k < 4; ++k) {
            const Token& t = peek(k);
            if (t.kind != TokenKind::Word) return false;
            if (t.upper == "JOIN") return true;
            static const std::unordered_set<std::string> mods = {"NATURAL", "INNER", "LEFT", "RIGHT",
                                                                 "FULL", "CROSS", "OUTER", "ASOF"};
            if (!mods.count(t.upper)) return false;
            if ((t.upper == "LEFT" || t.upper == "RIGHT") && peek(k + 1).kind == TokenKind::LParen) return false;
        }
        return false;
    }

    void from_item() {
        accept_word("LATERAL");
        if (peek().kind == TokenKind::LParen) {
            if (is_word(peek(1), "SELECT") || is_word(peek(1), "WITH")) {
                subquery_in_parens();
            } else {
                advance();
                from_clause();
                expect(TokenKind::RParen, "')'");
            }
        } else if (is_name(peek()) && !(peek().kind == TokenKind::Word && kFromStop.count(peek().upper))) {
            std::string name = advance().text;
            while (peek().kind == TokenKind::Dot && is_name(peek(1))) {
                advance();
                name = advance().text;
            }
            if (peek().kind == TokenKind::LParen) {
                // table function, e.g. FLATTEN(...)
                advance();
                expression(Ctx::Other, true);
                expect(TokenKind::RParen, "')'");
            } else {
                ++result_.table_reference_total;
                base_tables_.insert(text::to_lower(name));
            }
        } else {
            throw AnalysisError("expected table reference but found '" +
                                    (peek().kind == TokenKind::End ? "end of input" : peek().text) + "'",
                                peek().offset);
        }
        // alias
        if (accept_word("AS")) {
            if (!is_name(peek())) throw AnalysisError("expected alias after AS", peek().offset);
            aliases_.insert(text::to_lower(advance().text));
        } else if (is_name(peek()) && !(peek().kind == TokenKind::Word && kFromStop.count(peek().upper))) {
            aliases_.insert(text::to_lower(advance().text));
        }
        if (peek().kind == TokenKind::LParen && peek(1).kind == TokenKind::Word &&
            !is_word(peek(1), "SELECT")) {
            // column alias list
            skip_parenthesised_names();
        }
    }

    void subquery_in_parens() {
        expect(TokenKind::LParen, "'('");
        result_.has_subquery = true;
        statement();
        expect(TokenKind::RParen, "')'");
    }

    void skip_parenthesised_names() {
        expect(TokenKind::LParen, "'('");
        while (peek().kind != TokenKind::RParen) {
            if (peek().kind == TokenKind::End) throw AnalysisError("unterminated parenthesis", peek().offset);
            advance();
        }
        advance();
    }

    bool at_clause_stop() const {
        const Token& t = peek();
        if (t.kind == TokenKind::End || t.kind == TokenKind::Semicolon || t.kind == TokenKind::RParen) return true;
        if (t.kind != TokenKind::Word) return false;
        if (kClauseStop.count(t.upper)) return true;
        if ((t.upper == "LEFT" || t.upper == "RIGHT") && peek(1).kind != TokenKind::LParen) return true;
        return false;
    }

    // Consumes a (comma-separated, when allowed) expression up to the next
    // clause boundary at depth zero. Nested parentheses are walked
    // recursively; parenthesised SELECT/WITH become subqueries.
    void expression(Ctx ctx, bool allow_commas, bool select_list = false) {
        bool consumed = false;
        int between_pending = 0;
        while (!at_clause_stop()) {
            if (peek().kind == TokenKind::Comma) {
                if (!allow_commas) break;
                advance();
                continue;
            }
            consumed = true;
            if (select_list && is_word(peek(), "AS") && is_name(peek(1))) {
                observe(advance(), ctx, between_pending);
                aliases_.insert(text::to_lower(advance().text));
                continue;
            }
            if (peek().kind == TokenKind::LParen) {
                parenthesised(ctx);
                continue;
            }
            observe(advance(), ctx, between_pending);
        }
        (void)consumed;
    }

    void parenthesised(Ctx ctx) {
        advance();  // '('
        if (is_word(peek(), "SELECT") || is_word(peek(), "WITH")) {
            result_.has_subquery = true;
            statement();
            expect(TokenKind::RParen, "')'");
            return;
        }
        int between_pending = 0;
        while (peek().kind != TokenKind::RParen) {
            if (peek().kind == TokenKind::End) throw AnalysisError("unterminated parenthesis", peek().offset);
            if (peek().kind == TokenKind::LParen) {
                parenthesised(ctx);
                continue;
            }
            if (peek().kind == TokenKind::Semicolon) throw AnalysisError("unexpected ';' inside parenthesis", peek().offset);
            observe(advance(), ctx, between_pending);
        }
        advance();  // ')'
    }

    void observe(const Token& t, Ctx ctx, int& between_pending) {
        const Token& next = peek();
        switch (t.kind) {
            case TokenKind::Word: {
                const std::string& u = t.upper;
                const bool call = next.kind == TokenKind::LParen;
                if (call && kAggregates.count(u)) result_.has_aggregation = true;
                if (call && kDateFunctions.count(u)) result_.has_datetime_ops = true;
                if (kDateKeywords.count(u)) result_.has_datetime_ops = true;
                if ((u == "DATE" || u == "TIMESTAMP" || u == "INTERVAL") && next.kind == TokenKind::String) {
                    result_.has_datetime_ops = true;
                }
                if (u == "INTERVAL") result_.has_datetime_ops = true;
                if (kDateTypes.count(u) && previous_was_cast_marker(t)) result_.has_datetime_ops = true;
                if (u == "BETWEEN") ++between_pending;
                if (ctx == Ctx::Predicate) {
                    if (u == "AND") {
                        if (between_pending > 0) {
                            --between_pending;
                        } else {
                            ++result_.logical_conditions;
                        }
                    } else if (u == "OR") {
                        ++result_.logical_conditions;
                    } else if (u == "NOT" && !last_was_is_) {
                        ++result_.logical_conditions;
                    }
                }
                last_was_is_ = (u == "IS");
                if (!call) {
                    if (next.kind == TokenKind::Dot) {
                        // qualifier; the column follows the dot
                    } else if (prev_dot_) {
                        column_candidates_.insert(text::to_lower(t.text));
                    } else if (!kNonColumnWords.count(u)) {
                        column_candidates_.insert(text::to_lower(t.text));
                    }
                }
                break;
            }
            case TokenKind::QuotedIdentifier:
                last_was_is_ = false;
                if (next.kind != TokenKind::Dot && next.kind != TokenKind::LParen) {
                    column_candidates_.insert(text::to_lower(t.text));
                }
                break;
            case TokenKind::String:
                last_was_is_ = false;
                if (looks_like_date(t.text)) result_.has_datetime_ops = true;
                break;
            default:
                last_was_is_ = false;
                break;
        }
        prev_dot_ = t.kind == TokenKind::Dot;
        prev_upper_ = t.kind == TokenKind::Word ? t.upper : t.text;
    }

    bool previous_was_cast_marker(const Token&) const { return prev_upper_ == "AS" || prev_upper_ == "::"; }

    static bool looks_like_date(std::string_view s) {
        if (s.size() < 10) return false;
        for (std::size_t i = 0; i < 10; ++i) {
            const bool digit = std::isdigit(static_cast<unsigned char>(s[i])) != 0;
            if (i == 4 || i == 7) {
                if (s[i] != '-') return false;
            } else if (!digit) {
                return false;
            }
        }
        return true;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    SqlComplexity result_;
    std::set<std::string> ctes_;
    std::set<std::string> aliases_;
    std::set<std::string> base_tables_;
    std::set<std::string> column_candidates_;
    bool last_was_is_ = false;
    bool prev_dot_ = false;
    std::string prev_upper_;
};

}  // namespace

SqlComplexity analyze_sql(std::string_view sql) { return Analyzer(sql).run(); }

bool parses(std::string_view sql) {
    try {
        analyze_sql(sql);
        return true;
    } catch (const AnalysisError&) {
        return false;
    }
}

}  // namespace epicohort::sql
