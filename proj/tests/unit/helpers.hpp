#pragma once

#include "epicohort/backend.hpp"
#include "epicohort/cohort.hpp"
#include "epicohort/embedding.hpp"
#include "epicohort/llm.hpp"
#include "epicohort/normalize.hpp"
#include "epicohort/types.hpp"

#include <chrono>
#include <filesystem>
#include <string>

namespace testutil {

inline std::string data_path(const std::string& rel) { return std::string(EPICOHORT_DATA_DIR) + "/" + rel; }

inline epicohort::Date ymd(int y, unsigned m, unsigned d) {
    return epicohort::Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline epicohort::Date add_days(epicohort::Date d, long n) {
    return epicohort::Date{std::chrono::sys_days{d} + std::chrono::days{n}};
}

// Unique scratch directory under the system temp dir, removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("epicohort_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Fixture vocabulary shipped in data/vocab.
inline std::vector<epicohort::ConceptRecord> fixture_vocabulary() {
    return epicohort::load_vocabulary(data_path("vocab/CONCEPT.csv"), data_path("vocab/CONCEPT_SYNONYM.csv"));
}

}  // namespace testutil
