#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace epicohort {

using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

std::string value_to_string(const Value& v);

struct RowSet {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;

    // Case-insensitive; nullopt when absent.
    std::optional<std::size_t> column_index(std::string_view name) const;
    bool empty() const { return rows.empty(); }
};

// An OMOP-schema SQL engine. One instance is one connection and is not
// shared between threads.
class SqlBackend {
public:
    virtual ~SqlBackend() = default;
    // Runs one read-only statement. Throws ExecutionError carrying the
    // engine's diagnostic verbatim.
    virtual RowSet execute(std::string_view sql) = 0;
    // Runs a multi-statement script (DDL, bulk inserts).
    virtual void execute_script(std::string_view sql) = 0;
    // Dialect tag, e.g. "sqlite" or "snowflake".
    virtual std::string dialect() const = 0;
};

// SQLite connection. `target` is a file path, ":memory:", or a `file:` URI
// (shared-cache in-memory databases let several connections see one DB).
class SqliteBackend : public SqlBackend {
public:
    explicit SqliteBackend(const std::string& target, bool read_only = false);
    ~SqliteBackend() override;
    SqliteBackend(const SqliteBackend&) = delete;
    SqliteBackend& operator=(const SqliteBackend&) = delete;

    RowSet execute(std::string_view sql) override;
    void execute_script(std::string_view sql) override;
    std::string dialect() const override { return "sqlite"; }

    sqlite3* handle() const { return db_; }

private:
    sqlite3* db_ = nullptr;
};

}  // namespace epicohort
