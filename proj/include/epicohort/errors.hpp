#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace epicohort {

// Root of every error raised by the library. Callers that only need a
// message catch this; callers that branch on failure kind catch subclasses.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LoadError : public Error {
public:
    LoadError(std::size_t record_index, const std::string& what)
        : Error("record " + std::to_string(record_index) + ": " + what),
          record_index_(record_index) {}
    std::size_t record_index() const noexcept { return record_index_; }

private:
    std::size_t record_index_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Raised by LLM, embedding and entity-detection providers. Transport and
// upstream failures are retriable; malformed configuration is not.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what, bool retriable = true)
        : Error(what), retriable_(retriable) {}
    bool retriable() const noexcept { return retriable_; }

private:
    bool retriable_;
};

class AnalysisError : public Error {
public:
    AnalysisError(const std::string& what, std::size_t offset)
        : Error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class GrammarError : public Error {
public:
    GrammarError(const std::string& what, std::size_t begin, std::size_t end)
        : Error(what + " at [" + std::to_string(begin) + ", " + std::to_string(end) + ")"),
          begin_(begin), end_(end) {}
    std::size_t begin() const noexcept { return begin_; }
    std::size_t end() const noexcept { return end_; }

private:
    std::size_t begin_;
    std::size_t end_;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class NormalizationError : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

// Engine rejected the statement. `diagnostic()` is the engine's message
// verbatim; it is what the healing loop feeds back to the generator.
class ExecutionError : public Error {
public:
    explicit ExecutionError(const std::string& diagnostic)
        : Error(diagnostic), diagnostic_(diagnostic) {}
    const std::string& diagnostic() const noexcept { return diagnostic_; }

private:
    std::string diagnostic_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class IndexingError : public Error {
public:
    IndexingError(const std::string& what, std::vector<std::string> failed_ids)
        : Error(what), failed_ids_(std::move(failed_ids)) {}
    const std::vector<std::string>& failed_ids() const noexcept { return failed_ids_; }

private:
    std::vector<std::string> failed_ids_;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

struct FieldDiagnostic {
    std::string field;
    std::string message;
};

class RequestError : public Error {
public:
    explicit RequestError(std::vector<FieldDiagnostic> diagnostics)
        : Error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}
    RequestError(std::string field, std::string message)
        : RequestError(std::vector<FieldDiagnostic>{{std::move(field), std::move(message)}}) {}
    const std::vector<FieldDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string summarize(const std::vector<FieldDiagnostic>& diags) {
        std::string out = "invalid request";
        for (const auto& d : diags) out += "; " + d.field + ": " + d.message;
        return out;
    }
    std::vector<FieldDiagnostic> diagnostics_;
};

}  // namespace epicohort
