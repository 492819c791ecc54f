#include "epicohort/backend.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <sqlite3.h>

#include <cctype>
#include <cstdio>

namespace epicohort {

std::string value_to_string(const Value& v) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(std::int64_t x) const { return std::to_string(x); }
        std::string operator()(double x) const {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            return buf;
        }
        std::string operator()(const std::string& s) const { return s; }
    };
    return std::visit(Visitor{}, v);
}

std::optional<std::size_t> RowSet::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (text::iequals(columns[i], name)) return i;
    }
    return std::nullopt;
}

SqliteBackend::SqliteBackend(const std::string& target, bool read_only) {
    int flags = read_only ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
    flags |= SQLITE_OPEN_URI | SQLITE_OPEN_NOMUTEX;
    if (sqlite3_open_v2(target.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        throw Error("cannot open sqlite database '" + target + "': " + msg);
    }
    sqlite3_busy_timeout(db_, 30000);
}

SqliteBackend::~SqliteBackend() {
    if (db_) sqlite3_close(db_);
}

namespace {

struct StmtGuard {
    sqlite3_stmt* stmt = nullptr;
    ~StmtGuard() {
        if (stmt) sqlite3_finalize(stmt);
    }
};

bool only_trailing_noise(const char* tail) {
    if (!tail) return true;
    std::string_view rest(tail);
    // allow whitespace, semicolons and line comments after the statement
    std::size_t i = 0;
    while (i < rest.size()) {
        const char c = rest[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ';') {
            ++i;
        } else if (c == '-' && i + 1 < rest.size() && rest[i + 1] == '-') {
            while (i < rest.size() && rest[i] != '\n') ++i;
        } else {
            return false;
        }
    }
    return true;
}

}  // namespace

RowSet SqliteBackend::execute(std::string_view sql) {
    StmtGuard g;
    const char* tail = nullptr;
    const std::string owned(sql);
    if (sqlite3_prepare_v2(db_, owned.c_str(), static_cast<int>(owned.size()), &g.stmt, &tail) != SQLITE_OK) {
        throw ExecutionError(sqlite3_errmsg(db_));
    }
    if (!g.stmt) throw ExecutionError("empty statement");
    if (!only_trailing_noise(tail)) throw ExecutionError("multiple statements are not allowed");
    if (!sqlite3_stmt_readonly(g.stmt)) throw ExecutionError("only read-only statements may be executed");

    RowSet out;
    const int ncol = sqlite3_column_count(g.stmt);
    for (int c = 0; c < ncol; ++c) out.columns.emplace_back(sqlite3_column_name(g.stmt, c));
    while (true) {
        const int rc = sqlite3_step(g.stmt);
        if (rc == SQLITE_DONE) break;
        if (rc != SQLITE_ROW) throw ExecutionError(sqlite3_errmsg(db_));
        std::vector<Value> row;
        row.reserve(static_cast<std::size_t>(ncol));
        for (int c = 0; c < ncol; ++c) {
            switch (sqlite3_column_type(g.stmt, c)) {
                case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(g.stmt, c))); break;
                case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(g.stmt, c)); break;
                case SQLITE_NULL: row.emplace_back(std::monostate{}); break;
                default: {
                    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(g.stmt, c));
                    row.emplace_back(std::string(p ? p : "", static_cast<std::size_t>(sqlite3_column_bytes(g.stmt, c))));
                }
            }
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

void SqliteBackend::execute_script(std::string_view sql) {
    char* err = nullptr;
    const std::string owned(sql);
    if (sqlite3_exec(db_, owned.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw ExecutionError(msg);
    }
}

}  // namespace epicohort
