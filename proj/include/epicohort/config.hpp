#pragma once

#include "epicohort/backend.hpp"
#include "epicohort/embedding.hpp"
#include "epicohort/eval.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/llm.hpp"
#include "epicohort/normalize.hpp"
#include "epicohort/pipeline.hpp"
#include "epicohort/retrieval.hpp"
#include "epicohort/synthetic.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace epicohort {

struct ProviderConfig {
    std::string kind = "mock";  // "mock" or "http"
    std::string transcript;     // mock only
    HttpProviderConfig http;
};

struct EmbeddingConfig {
    std::string kind = "hashing";  // "hashing" or "http"
    std::size_t dimension = HashingEmbedder::kDefaultDimension;
    HttpProviderConfig http;
};

struct BackendConfig {
    std::string engine = "sqlite";
    std::string path;  // database file; empty means a synthetic in-memory DB
    std::string dialect = "sqlite";
    std::string credential_env;  // unused by sqlite, kept for remote engines
    std::optional<SyntheticDbSpec> synthetic;
};

struct JobStoreConfig {
    std::string path = "epicohort_jobs.db";
    int retention_days = 30;
    int workers = 2;
    int timeout_seconds = 600;
};

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
};

struct AppConfig {
    std::filesystem::path base_dir;  // relative paths resolve against this
    ProviderConfig llm;
    std::optional<ProviderConfig> verifier;
    EmbeddingConfig embedding;
    std::string entity_detector = "dictionary";  // "dictionary", "llm" or "none"
    std::string entity_dictionary;
    std::string criteria_parser = "structured";  // "structured" or "llm"
    std::string kb_ask;
    std::string kb_coho;
    std::string vocab_concepts;
    std::string vocab_synonyms;
    BackendConfig backend;
    std::size_t k = 5;
    int max_healing_iterations = 3;
    long window_days = 30;
    std::size_t char_budget = 24000;
    bool exclusions_first = false;
    JobStoreConfig job_store;
    ServerConfig server;
};

// Throws ConfigError naming the offending key.
AppConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
AppConfig load_config(const std::string& path);

SyntheticDbSpec synthetic_spec_from_json(const nlohmann::json& j);

// Everything a pipeline run needs, built from an AppConfig. Not copyable:
// indexes keep pointers to the providers owned here.
class Runtime {
public:
    static std::unique_ptr<Runtime> create(AppConfig config);
    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    const AppConfig& config() const { return config_; }

    // A fresh connection. Synthetic databases live in shared-cache memory
    // kept alive by this runtime.
    std::unique_ptr<SqlBackend> open_backend() const;

    PipelineResources resources(SqlBackend& backend) const;
    PipelineOptions pipeline_options() const;
    EvalConfig eval_config() const;

    const std::vector<KBEntry>& ask_kb() const { return ask_kb_; }
    const std::vector<KBEntry>& coho_kb() const { return coho_kb_; }
    LlmProvider& llm() const { return *llm_; }
    CriteriaParser* parser() const { return parser_.get(); }

private:
    Runtime() = default;

    AppConfig config_;
    std::unique_ptr<LlmProvider> llm_;
    std::unique_ptr<LlmProvider> verifier_;
    std::unique_ptr<EmbeddingProvider> embedder_;
    std::unique_ptr<EntityDetector> detector_;
    std::unique_ptr<CriteriaParser> parser_;
    std::vector<KBEntry> ask_kb_;
    std::vector<KBEntry> coho_kb_;
    std::unique_ptr<VectorIndex> ask_index_;
    std::unique_ptr<VectorIndex> coho_index_;
    std::unique_ptr<VocabularyIndex> vocab_;
    std::string backend_target_;
    std::unique_ptr<SqliteBackend> keeper_;
};

std::unique_ptr<LlmProvider> make_llm_provider(const ProviderConfig& cfg);

}  // namespace epicohort
