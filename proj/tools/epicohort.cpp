// Command-line entry point: generate, funnel, evaluate, kb stats, synth, serve.

#include "epicohort/config.hpp"
#include "epicohort/errors.hpp"
#include "epicohort/eval.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/pipeline.hpp"
#include "epicohort/service.hpp"
#include "epicohort/synthetic.hpp"
#include "epicohort/text.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <filesystem>
#include <iostream>

using namespace epicohort;
namespace fs = std::filesystem;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

Strategy strategy_arg(const std::string& s) {
    auto parsed = parse_strategy(s);
    if (!parsed) throw ConfigError("unknown strategy '" + s + "'; valid values: zs, rag_a, rag_c, rag_ac");
    return *parsed;
}

void print_funnel(const Funnel& f, const CohortCriteria& c) {
    std::map<std::string, std::string> label;
    for (const auto* list : {&c.inclusion, &c.exclusion}) {
        for (const auto& cr : *list) label[cr.id] = cr.text;
    }
    for (const auto& s : f.steps) {
        std::cout << "  " << s.step_index << "  " << step_kind_name(s.kind) << "  " << s.criterion_id << "  "
                  << s.remaining_count;
        if (label.count(s.criterion_id)) std::cout << "  " << label[s.criterion_id];
        std::cout << "\n";
    }
}

struct RunArgs {
    std::string config;
    std::string criteria;
    std::string strategy = "rag_ac";
    std::string out_dir = ".";
};

PipelineOutput run_from_args(const RunArgs& a, bool funnel) {
    auto rt = Runtime::create(load_config(a.config));
    auto backend = rt->open_backend();
    auto options = rt->pipeline_options();
    options.funnel = funnel;
    return run_pipeline(text::read_file(a.criteria), strategy_arg(a.strategy), rt->resources(*backend), options);
}

void write_sql_doc(const PipelineOutput& out, const fs::path& path) {
    nlohmann::json attempts = nlohmann::json::array();
    for (const auto& at : out.attempts) attempts.push_back(to_json(at));
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& q : out.funnel_queries) {
        steps.push_back({{"criterion_id", q.criterion_id},
                         {"kind", step_kind_name(q.kind)},
                         {"generated_sql", q.generated_sql},
                         {"executable_sql", q.executable_sql},
                         {"iterations", q.iterations}});
    }
    nlohmann::json mappings = nlohmann::json::array();
    for (const auto& m : out.mappings) mappings.push_back(to_json(m));
    nlohmann::json doc = {{"strategy", strategy_name(out.strategy)},
                          {"generated_sql", out.generated_sql},
                          {"executable_sql", out.executable_sql},
                          {"iterations", out.iterations},
                          {"attempts", attempts},
                          {"funnel", steps},
                          {"mappings", mappings}};
    text::write_file(path.string(), doc.dump(2) + "\n");
}

int cmd_generate(const RunArgs& a, bool no_funnel) {
    const auto out = run_from_args(a, !no_funnel);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    text::write_file((dir / "cohort.csv").string(), cohort_to_csv(out.cohort));
    write_sql_doc(out, dir / "sql.json");
    std::cout << "cohort: " << out.cohort.size() << " persons -> " << (dir / "cohort.csv").string() << "\n";
    std::cout << "healing iterations: " << out.iterations << "\n";
    if (out.funnel) {
        text::write_file((dir / "funnel.json").string(), to_json(*out.funnel).dump(2) + "\n");
        std::cout << "funnel -> " << (dir / "funnel.json").string() << "\n";
        print_funnel(*out.funnel, out.criteria);
    }
    return 0;
}

int cmd_funnel(const RunArgs& a) {
    const auto out = run_from_args(a, true);
    fs::create_directories(a.out_dir);
    const auto path = fs::path(a.out_dir) / "funnel.json";
    text::write_file(path.string(), to_json(*out.funnel).dump(2) + "\n");
    std::cout << "funnel -> " << path.string() << "\n";
    print_funnel(*out.funnel, out.criteria);
    return 0;
}

struct EvalArgs {
    std::string config;
    std::string kb_ask;
    std::string kb_coho;
    std::string strategies = "zs,rag_a,rag_c,rag_ac";
    bool loo = false;
    std::string out;
};

int cmd_evaluate(const EvalArgs& a) {
    auto cfg = load_config(a.config);
    if (!a.kb_ask.empty()) cfg.kb_ask = a.kb_ask;
    if (!a.kb_coho.empty()) cfg.kb_coho = a.kb_coho;
    if (cfg.kb_coho.empty()) throw ConfigError("evaluation needs a COHO KB (--kb-coho or kb.coho)");
    auto rt = Runtime::create(cfg);
    EvalConfig ec = rt->eval_config();
    ec.leave_one_out = a.loo;
    ec.strategies.clear();
    for (const auto& s : text::split(a.strategies, ',')) {
        if (!text::trim(s).empty()) ec.strategies.push_back(strategy_arg(std::string(text::trim(s))));
    }
    auto backend = rt->open_backend();
    const auto samples = samples_from_kb(rt->coho_kb(), rt->parser());
    const auto report = run_eval(samples, rt->resources(*backend), ec, rt->pipeline_options());
    std::cout << format_report_table(report);
    if (!a.out.empty()) {
        text::write_file(a.out, to_json(report).dump(2) + "\n");
        std::cout << "report -> " << a.out << "\n";
    }
    return 0;
}

int cmd_kb_stats(const std::string& path, const std::string& kind_name) {
    auto kind = parse_kb_kind(kind_name);
    if (!kind) throw ConfigError("--kind must be ask or coho");
    const auto entries = load_kb(path, *kind);
    std::cout << to_json(kb_stats(entries)).dump(2) << "\n";
    return 0;
}

int cmd_synth(const std::string& out, const SyntheticDbSpec& spec, bool force) {
    if (fs::exists(out)) {
        if (!force) throw ConfigError(out + " exists; pass --force to replace it");
        fs::remove(out);
    }
    SqliteBackend db(out);
    generate_synthetic_omop(spec, db);
    std::cout << "synthetic OMOP database with " << spec.n_persons << " persons -> " << out << "\n";
    return 0;
}

int cmd_serve(const std::string& config, std::string host, int port) {
    auto rt = Runtime::create(load_config(config));
    JobStore store(rt->config().job_store.path);
    JobService service(*rt, store);
    httplib::Server server;
    register_routes(server, service);
    if (host.empty()) host = rt->config().server.host;
    if (port < 0) port = rt->config().server.port;
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << host << ":" << port << std::endl;
    if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
    service.shutdown();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cohort SQL generation over OMOP-CDM"};
    app.require_subcommand(1);

    RunArgs gen;
    bool no_funnel = false;
    auto* generate = app.add_subcommand("generate", "Generate cohort SQL, run it and write the cohort and funnel");
    generate->add_option("--config", gen.config, "Config file")->required()->check(CLI::ExistingFile);
    generate->add_option("--criteria", gen.criteria, "Criteria text file")->required()->check(CLI::ExistingFile);
    generate->add_option("--strategy", gen.strategy, "zs, rag_a, rag_c or rag_ac")->capture_default_str();
    generate->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();
    generate->add_flag("--no-funnel", no_funnel, "Skip the per-criterion funnel");

    RunArgs fun;
    auto* funnel = app.add_subcommand("funnel", "Build the attrition funnel only");
    funnel->add_option("--config", fun.config, "Config file")->required()->check(CLI::ExistingFile);
    funnel->add_option("--criteria", fun.criteria, "Criteria text file")->required()->check(CLI::ExistingFile);
    funnel->add_option("--strategy", fun.strategy, "zs, rag_a, rag_c or rag_ac")->capture_default_str();
    funnel->add_option("--out-dir", fun.out_dir, "Output directory")->capture_default_str();

    EvalArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Score strategies against the COHO references");
    evaluate->add_option("--backend", ev.config, "Config file (backend, providers, vocabulary)")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--kb-ask", ev.kb_ask, "ASK KB (JSONL)")->check(CLI::ExistingFile);
    evaluate->add_option("--kb-coho", ev.kb_coho, "COHO KB (JSONL)")->check(CLI::ExistingFile);
    evaluate->add_option("--strategies", ev.strategies, "Comma-separated strategies")->capture_default_str();
    evaluate->add_flag("--loo", ev.loo, "Leave each sample out of its own retrieval");
    evaluate->add_option("--out", ev.out, "Write the JSON report here");

    auto* kb = app.add_subcommand("kb", "Knowledge base utilities");
    kb->require_subcommand(1);
    std::string kb_path, kb_kind = "ask";
    auto* stats = kb->add_subcommand("stats", "Complexity statistics of a KB");
    stats->add_option("--path", kb_path, "KB file (JSONL)")->required()->check(CLI::ExistingFile);
    stats->add_option("--kind", kb_kind, "ask or coho")->capture_default_str();

    SyntheticDbSpec spec;
    std::string synth_out, synth_start, synth_end;
    bool force = false;
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic OMOP database");
    synth->add_option("--out", synth_out, "SQLite file")->required();
    synth->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
    synth->add_option("--persons", spec.n_persons, "Number of persons")->capture_default_str();
    synth->add_option("--start", synth_start, "First date (YYYY-MM-DD)");
    synth->add_option("--end", synth_end, "Last date (YYYY-MM-DD)");
    synth->add_flag("--force", force, "Replace an existing file");

    std::string serve_config, serve_host;
    int serve_port = -1;
    auto* serve = app.add_subcommand("serve", "Run the HTTP job service");
    serve->add_option("--config", serve_config, "Config file")->required()->check(CLI::ExistingFile);
    serve->add_option("--host", serve_host, "Bind address (overrides config)");
    serve->add_option("--port", serve_port, "Port (overrides config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) return cmd_generate(gen, no_funnel);
        if (*funnel) return cmd_funnel(fun);
        if (*evaluate) return cmd_evaluate(ev);
        if (*stats) return cmd_kb_stats(kb_path, kb_kind);
        if (*synth) {
            if (!synth_start.empty()) {
                auto d = parse_iso_date(synth_start);
                if (!d) throw ConfigError("--start is not an ISO-8601 date");
                spec.start = *d;
            }
            if (!synth_end.empty()) {
                auto d = parse_iso_date(synth_end);
                if (!d) throw ConfigError("--end is not an ISO-8601 date");
                spec.end = *d;
            }
            return cmd_synth(synth_out, spec, force);
        }
        if (*serve) return cmd_serve(serve_config, serve_host, serve_port);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
