#include "epicohort/config.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/text.hpp"

#include <atomic>

namespace epicohort {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, const T& fallback, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

const json& section(const json& root, const char* key) {
    static const json kEmpty = json::object();
    if (!root.contains(key) || root.at(key).is_null()) return kEmpty;
    if (!root.at(key).is_object()) throw ConfigError(std::string(key) + " must be an object");
    return root.at(key);
}

std::string resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return p;
    fs::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

HttpProviderConfig http_config(const json& j, const std::string& where, const std::string& default_path) {
    HttpProviderConfig h;
    h.model = get_or<std::string>(j, "model", "", where);
    h.endpoint = get_or<std::string>(j, "endpoint", "", where);
    h.path = get_or<std::string>(j, "path", default_path, where);
    h.credential_env = get_or<std::string>(j, "credential_env", "", where);
    h.timeout_seconds = get_or<int>(j, "timeout_seconds", 120, where);
    if (j.contains("api_key")) {
        throw ConfigError(where + ".api_key: credentials are read from the environment; set credential_env instead");
    }
    return h;
}

ProviderConfig provider_config(const json& j, const fs::path& base, const std::string& where) {
    ProviderConfig p;
    if (j.contains("api_key")) {
        throw ConfigError(where + ".api_key: credentials are read from the environment; set credential_env instead");
    }
    p.kind = get_or<std::string>(j, "kind", "mock", where);
    if (p.kind == "mock") {
        p.transcript = resolve(base, get_or<std::string>(j, "transcript", "", where));
        if (p.transcript.empty()) throw ConfigError(where + ".transcript is required for mock providers");
    } else if (p.kind == "http") {
        p.http = http_config(j, where, "/v1/chat/completions");
        if (p.http.endpoint.empty() || p.http.model.empty()) {
            throw ConfigError(where + ": http providers need endpoint and model");
        }
    } else {
        throw ConfigError(where + ".kind must be 'mock' or 'http', got '" + p.kind + "'");
    }
    return p;
}

}  // namespace

SyntheticDbSpec synthetic_spec_from_json(const json& j) {
    SyntheticDbSpec s;
    const std::string where = "backend.synthetic";
    s.seed = get_or<std::uint64_t>(j, "seed", s.seed, where);
    s.n_persons = get_or<int>(j, "n_persons", s.n_persons, where);
    s.n_providers = get_or<int>(j, "n_providers", s.n_providers, where);
    if (j.contains("start")) {
        auto d = parse_iso_date(get_or<std::string>(j, "start", "", where));
        if (!d) throw ConfigError(where + ".start is not an ISO-8601 date");
        s.start = *d;
    }
    if (j.contains("end")) {
        auto d = parse_iso_date(get_or<std::string>(j, "end", "", where));
        if (!d) throw ConfigError(where + ".end is not an ISO-8601 date");
        s.end = *d;
    }
    if (j.contains("densities")) {
        const auto& d = j.at("densities");
        auto& o = s.densities;
        o.visits = get_or<double>(d, "visits", o.visits, where + ".densities");
        o.conditions = get_or<double>(d, "conditions", o.conditions, where + ".densities");
        o.drugs = get_or<double>(d, "drugs", o.drugs, where + ".densities");
        o.procedures = get_or<double>(d, "procedures", o.procedures, where + ".densities");
        o.measurements = get_or<double>(d, "measurements", o.measurements, where + ".densities");
    }
    try {
        validate_spec(s);
    } catch (const ValidationError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return s;
}

AppConfig parse_config(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be an object");
    AppConfig c;
    c.base_dir = base_dir;

    c.llm = provider_config(section(j, "llm"), base_dir, "llm");
    if (j.contains("verifier") && !j.at("verifier").is_null()) {
        c.verifier = provider_config(section(j, "verifier"), base_dir, "verifier");
    }

    const auto& emb = section(j, "embedding");
    c.embedding.kind = get_or<std::string>(emb, "kind", "hashing", "embedding");
    c.embedding.dimension = get_or<std::size_t>(emb, "dimension", c.embedding.dimension, "embedding");
    if (c.embedding.kind == "http") {
        c.embedding.http = http_config(emb, "embedding", "/v1/embeddings");
        if (c.embedding.http.model.empty()) c.embedding.http.model = kReferenceEmbeddingModel;
    } else if (c.embedding.kind != "hashing") {
        throw ConfigError("embedding.kind must be 'hashing' or 'http'");
    }

    const auto& det = section(j, "entity_detector");
    c.entity_detector = get_or<std::string>(det, "kind", "none", "entity_detector");
    c.entity_dictionary = resolve(base_dir, get_or<std::string>(det, "path", "", "entity_detector"));
    if (c.entity_detector == "dictionary" && c.entity_dictionary.empty()) {
        throw ConfigError("entity_detector.path is required for the dictionary detector");
    }
    if (c.entity_detector != "dictionary" && c.entity_detector != "llm" && c.entity_detector != "none") {
        throw ConfigError("entity_detector.kind must be 'dictionary', 'llm' or 'none'");
    }
    c.criteria_parser = get_or<std::string>(j, "criteria_parser", "structured", "config");
    if (c.criteria_parser != "structured" && c.criteria_parser != "llm") {
        throw ConfigError("criteria_parser must be 'structured' or 'llm'");
    }

    const auto& kb = section(j, "kb");
    c.kb_ask = resolve(base_dir, get_or<std::string>(kb, "ask", "", "kb"));
    c.kb_coho = resolve(base_dir, get_or<std::string>(kb, "coho", "", "kb"));

    const auto& vocab = section(j, "vocabulary");
    c.vocab_concepts = resolve(base_dir, get_or<std::string>(vocab, "concepts", "", "vocabulary"));
    c.vocab_synonyms = resolve(base_dir, get_or<std::string>(vocab, "synonyms", "", "vocabulary"));
    if (c.vocab_concepts.empty()) throw ConfigError("vocabulary.concepts is required");

    const auto& be = section(j, "backend");
    c.backend.engine = get_or<std::string>(be, "engine", "sqlite", "backend");
    if (c.backend.engine != "sqlite") {
        throw ConfigError("backend.engine '" + c.backend.engine + "' is not supported; only 'sqlite' is built in");
    }
    c.backend.path = resolve(base_dir, get_or<std::string>(be, "path", "", "backend"));
    c.backend.dialect = get_or<std::string>(be, "dialect", "sqlite", "backend");
    c.backend.credential_env = get_or<std::string>(be, "credential_env", "", "backend");
    if (be.contains("synthetic")) c.backend.synthetic = synthetic_spec_from_json(be.at("synthetic"));
    if (c.backend.path.empty() && !c.backend.synthetic) c.backend.synthetic = SyntheticDbSpec{};

    c.k = get_or<std::size_t>(section(j, "retrieval"), "k", c.k, "retrieval");
    if (c.k == 0) throw ConfigError("retrieval.k must be at least 1");
    c.max_healing_iterations = get_or<int>(section(j, "healing"), "max_iterations", 3, "healing");
    if (c.max_healing_iterations < 0) throw ConfigError("healing.max_iterations must be non-negative");
    c.window_days = get_or<long>(section(j, "eval"), "window_days", 30, "eval");
    if (c.window_days < 0) throw ConfigError("eval.window_days must be non-negative");
    c.char_budget = get_or<std::size_t>(section(j, "prompt"), "char_budget", c.char_budget, "prompt");
    const auto order = get_or<std::string>(section(j, "funnel"), "order", "inclusions_first", "funnel");
    if (order != "inclusions_first" && order != "exclusions_first") {
        throw ConfigError("funnel.order must be 'inclusions_first' or 'exclusions_first'");
    }
    c.exclusions_first = order == "exclusions_first";

    const auto& js = section(j, "job_store");
    c.job_store.path = resolve(base_dir, get_or<std::string>(js, "path", c.job_store.path, "job_store"));
    c.job_store.retention_days = get_or<int>(js, "retention_days", 30, "job_store");
    c.job_store.workers = get_or<int>(js, "workers", 2, "job_store");
    c.job_store.timeout_seconds = get_or<int>(js, "timeout_seconds", 600, "job_store");
    if (c.job_store.workers < 1) throw ConfigError("job_store.workers must be at least 1");

    const auto& srv = section(j, "server");
    c.server.host = get_or<std::string>(srv, "host", c.server.host, "server");
    c.server.port = get_or<int>(srv, "port", c.server.port, "server");
    return c;
}

AppConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(text::read_file(path));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j, fs::absolute(fs::path(path)).parent_path());
}

std::unique_ptr<LlmProvider> make_llm_provider(const ProviderConfig& cfg) {
    if (cfg.kind == "mock") return MockLlmProvider::from_file(cfg.transcript);
    return std::make_unique<HttpLlmProvider>(cfg.http);
}

std::unique_ptr<Runtime> Runtime::create(AppConfig config) {
    std::unique_ptr<Runtime> rt(new Runtime());
    rt->config_ = std::move(config);
    const auto& c = rt->config_;

    rt->llm_ = make_llm_provider(c.llm);
    if (c.verifier) rt->verifier_ = make_llm_provider(*c.verifier);
    if (c.embedding.kind == "http") {
        rt->embedder_ = std::make_unique<HttpEmbeddingProvider>(c.embedding.http, c.embedding.dimension);
    } else {
        rt->embedder_ = std::make_unique<HashingEmbedder>(c.embedding.dimension);
    }
    if (c.entity_detector == "dictionary") {
        rt->detector_ = std::make_unique<DictionaryEntityDetector>(DictionaryEntityDetector::from_file(c.entity_dictionary));
    } else if (c.entity_detector == "llm") {
        rt->detector_ = std::make_unique<LlmEntityDetector>(*rt->llm_);
    }
    if (c.criteria_parser == "llm") {
        rt->parser_ = std::make_unique<LlmCriteriaParser>(*rt->llm_);
    } else {
        rt->parser_ = std::make_unique<StructuredCriteriaParser>();
    }

    if (!c.kb_ask.empty()) rt->ask_kb_ = load_kb(c.kb_ask, KBKind::Ask);
    if (!c.kb_coho.empty()) rt->coho_kb_ = load_kb(c.kb_coho, KBKind::Coho);
    rt->ask_index_ = std::make_unique<VectorIndex>(VectorIndex::build(rt->ask_kb_, *rt->embedder_));
    rt->coho_index_ = std::make_unique<VectorIndex>(VectorIndex::build(rt->coho_kb_, *rt->embedder_));
    rt->vocab_ = std::make_unique<VocabularyIndex>(
        VocabularyIndex::build(load_vocabulary(c.vocab_concepts, c.vocab_synonyms), *rt->embedder_));

    if (c.backend.path.empty()) {
        static std::atomic<int> counter{0};
        rt->backend_target_ = "file:epicohort_synth_" + std::to_string(counter++) + "?mode=memory&cache=shared";
        rt->keeper_ = std::make_unique<SqliteBackend>(rt->backend_target_);
        generate_synthetic_omop(*c.backend.synthetic, *rt->keeper_);
    } else {
        if (!fs::exists(c.backend.path)) throw ConfigError("backend.path does not exist: " + c.backend.path);
        rt->backend_target_ = c.backend.path;
    }
    return rt;
}

std::unique_ptr<SqlBackend> Runtime::open_backend() const {
    return std::make_unique<SqliteBackend>(backend_target_);
}

PipelineResources Runtime::resources(SqlBackend& backend) const {
    PipelineResources r;
    r.llm = llm_.get();
    r.verifier = verifier_.get();
    r.detector = detector_.get();
    r.parser = parser_.get();
    r.ask_index = ask_index_.get();
    r.coho_index = coho_index_.get();
    r.vocab = vocab_.get();
    r.backend = &backend;
    return r;
}

PipelineOptions Runtime::pipeline_options() const {
    PipelineOptions o;
    o.prompt.retrieval.k = config_.k;
    o.prompt.char_budget = config_.char_budget;
    o.prompt.dialect = config_.backend.dialect;
    o.healing.max_iterations = config_.max_healing_iterations;
    o.exclusions_first = config_.exclusions_first;
    return o;
}

EvalConfig Runtime::eval_config() const {
    EvalConfig e;
    e.window_days = config_.window_days;
    return e;
}

}  // namespace epicohort
