#include "epicohort/service.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/text.hpp"

#include <httplib.h>
#include <sqlite3.h>

#include <random>

namespace epicohort {

using nlohmann::json;

namespace {

std::int64_t now_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string new_job_id() {
    static std::mutex mu;
    static std::mt19937_64 gen{std::random_device{}()};
    std::lock_guard lock(mu);
    return text::hex64(gen()) + text::hex64(gen());
}

int state_rank(JobState s) { return static_cast<int>(s); }

struct Stmt {
    sqlite3_stmt* s = nullptr;
    Stmt(sqlite3* db, const std::string& sql) {
        if (sqlite3_prepare_v2(db, sql.c_str(), -1, &s, nullptr) != SQLITE_OK) {
            throw Error(std::string("job store: ") + sqlite3_errmsg(db));
        }
    }
    ~Stmt() { sqlite3_finalize(s); }
    void bind(const std::vector<std::string>& params) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            sqlite3_bind_text(s, static_cast<int>(i + 1), params[i].c_str(), -1, SQLITE_TRANSIENT);
        }
    }
    std::string text(int col) const {
        const auto* p = sqlite3_column_text(s, col);
        return p ? reinterpret_cast<const char*>(p) : "";
    }
    bool null(int col) const { return sqlite3_column_type(s, col) == SQLITE_NULL; }
};

}  // namespace

JobStore::JobStore(const std::string& path) {
    if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw Error("cannot open job store '" + path + "': " + msg);
    }
    sqlite3_busy_timeout(db_, 10000);
    char* err = nullptr;
    const char* ddl =
        "CREATE TABLE IF NOT EXISTS jobs ("
        " job_id TEXT PRIMARY KEY, state TEXT NOT NULL, strategy TEXT NOT NULL, request TEXT NOT NULL,"
        " criteria TEXT, outputs TEXT, error TEXT, created_at INTEGER NOT NULL, updated_at INTEGER NOT NULL)";
    if (sqlite3_exec(db_, ddl, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        sqlite3_close(db_);
        throw Error("job store schema: " + msg);
    }
}

JobStore::~JobStore() { sqlite3_close(db_); }

void JobStore::exec(const std::string& sql, const std::vector<std::string>& params) const {
    Stmt st(db_, sql);
    st.bind(params);
    if (sqlite3_step(st.s) != SQLITE_DONE) throw Error(std::string("job store: ") + sqlite3_errmsg(db_));
}

void JobStore::insert(const JobRecord& job) {
    std::lock_guard lock(mu_);
    exec("INSERT INTO jobs (job_id, state, strategy, request, created_at, updated_at) VALUES (?, ?, ?, ?, ?, ?)",
         {job.job_id, std::string(job_state_name(job.state)), std::string(strategy_name(job.strategy)),
          job.request.dump(), std::to_string(job.created_at), std::to_string(job.updated_at)});
}

std::optional<JobRecord> JobStore::get(const std::string& job_id) const {
    std::lock_guard lock(mu_);
    Stmt st(db_,
            "SELECT job_id, state, strategy, request, criteria, outputs, error, created_at, updated_at FROM jobs "
            "WHERE job_id = ?");
    st.bind({job_id});
    if (sqlite3_step(st.s) != SQLITE_ROW) return std::nullopt;
    JobRecord r;
    r.job_id = st.text(0);
    r.state = parse_job_state(st.text(1)).value_or(JobState::Failed);
    r.strategy = parse_strategy(st.text(2)).value_or(Strategy::RAG_AC);
    r.request = json::parse(st.text(3));
    if (!st.null(4)) r.criteria = json::parse(st.text(4));
    if (!st.null(5)) r.outputs = json::parse(st.text(5));
    if (!st.null(6)) r.error = st.text(6);
    r.created_at = sqlite3_column_int64(st.s, 7);
    r.updated_at = sqlite3_column_int64(st.s, 8);
    return r;
}

bool JobStore::advance(const std::string& job_id, JobState state) {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT state FROM jobs WHERE job_id = ?");
    st.bind({job_id});
    if (sqlite3_step(st.s) != SQLITE_ROW) throw NotFoundError("job " + job_id + " not found");
    const auto current = parse_job_state(st.text(0)).value_or(JobState::Failed);
    if (is_terminal(current) || state_rank(state) <= state_rank(current)) return false;
    exec("UPDATE jobs SET state = ?, updated_at = ? WHERE job_id = ?",
         {std::string(job_state_name(state)), std::to_string(now_seconds()), job_id});
    return true;
}

void JobStore::set_criteria(const std::string& job_id, const json& criteria) {
    std::lock_guard lock(mu_);
    exec("UPDATE jobs SET criteria = ? WHERE job_id = ?", {criteria.dump(), job_id});
}

void JobStore::complete(const std::string& job_id, const json& outputs) {
    std::lock_guard lock(mu_);
    // outputs land together with DONE so no reader sees DONE without them
    exec("UPDATE jobs SET state = 'DONE', outputs = ?, updated_at = ? WHERE job_id = ? AND state NOT IN "
         "('DONE', 'FAILED')",
         {outputs.dump(), std::to_string(now_seconds()), job_id});
}

void JobStore::fail(const std::string& job_id, const std::string& error) {
    std::lock_guard lock(mu_);
    exec("UPDATE jobs SET state = 'FAILED', error = ?, updated_at = ? WHERE job_id = ? AND state NOT IN "
         "('DONE', 'FAILED')",
         {error, std::to_string(now_seconds()), job_id});
}

std::size_t JobStore::fail_unfinished(const std::string& reason) {
    std::lock_guard lock(mu_);
    exec("UPDATE jobs SET state = 'FAILED', error = ?, updated_at = ? WHERE state NOT IN ('DONE', 'FAILED')",
         {reason, std::to_string(now_seconds())});
    return static_cast<std::size_t>(sqlite3_changes(db_));
}

std::size_t JobStore::purge_older_than(int days) {
    std::lock_guard lock(mu_);
    exec("DELETE FROM jobs WHERE created_at < ? AND state IN ('DONE', 'FAILED')",
         {std::to_string(now_seconds() - static_cast<std::int64_t>(days) * 86400)});
    return static_cast<std::size_t>(sqlite3_changes(db_));
}

std::vector<std::string> JobStore::job_ids() const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT job_id FROM jobs ORDER BY created_at, job_id");
    std::vector<std::string> out;
    while (sqlite3_step(st.s) == SQLITE_ROW) out.push_back(st.text(0));
    return out;
}

JobService::JobService(const Runtime& runtime, JobStore& store) : runtime_(runtime), store_(store) {
    store_.fail_unfinished("service restarted before the job finished");
    store_.purge_older_than(runtime_.config().job_store.retention_days);
    for (int i = 0; i < runtime_.config().job_store.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobService::~JobService() { shutdown(); }

void JobService::shutdown() {
    {
        std::lock_guard lock(mu_);
        if (stopping_) return;
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) {
        if (t.joinable()) t.join();
    }
}

std::string JobService::submit(const json& payload) {
    std::vector<FieldDiagnostic> diags;
    if (!payload.is_object()) throw RequestError("body", "must be a JSON object");
    Strategy strategy = Strategy::RAG_AC;
    if (payload.contains("strategy")) {
        const auto& s = payload.at("strategy");
        std::optional<Strategy> parsed;
        if (s.is_string()) parsed = parse_strategy(s.get<std::string>());
        if (!parsed) {
            diags.push_back({"strategy", "unknown strategy; valid values: zs, rag_a, rag_c, rag_ac"});
        } else {
            strategy = *parsed;
        }
    }
    if (!payload.contains("criteria")) {
        diags.push_back({"criteria", "required"});
    } else {
        const auto& c = payload.at("criteria");
        if (c.is_string()) {
            if (text::trim(c.get<std::string>()).empty()) diags.push_back({"criteria", "criteria text is empty"});
        } else if (c.is_object()) {
            try {
                auto parsed = criteria_from_json(c);
                for (auto& p : validate_criteria(parsed)) diags.push_back({"criteria", p});
            } catch (const RequestError& e) {
                for (const auto& d : e.diagnostics()) diags.push_back(d);
            }
        } else {
            diags.push_back({"criteria", "must be a string or an object"});
        }
    }
    if (payload.contains("overrides")) {
        const auto& o = payload.at("overrides");
        if (!o.is_object()) {
            diags.push_back({"overrides", "must be an object"});
        } else {
            for (const auto& [key, v] : o.items()) {
                if (key != "k" && key != "max_healing_iterations" && key != "funnel") {
                    diags.push_back({"overrides." + key, "unknown override; valid: k, max_healing_iterations, funnel"});
                } else if (key == "funnel" ? !v.is_boolean() : !(v.is_number_unsigned() || v.is_number_integer())) {
                    diags.push_back({"overrides." + key, "wrong type"});
                } else if (key == "k" && v.get<long>() < 1) {
                    diags.push_back({"overrides.k", "must be at least 1"});
                } else if (key == "max_healing_iterations" && v.get<long>() < 0) {
                    diags.push_back({"overrides.max_healing_iterations", "must be non-negative"});
                }
            }
        }
    }
    if (!diags.empty()) throw RequestError(std::move(diags));

    JobRecord job;
    job.job_id = new_job_id();
    job.strategy = strategy;
    job.request = payload;
    job.created_at = job.updated_at = now_seconds();
    store_.insert(job);
    {
        std::lock_guard lock(mu_);
        queue_.push_back(job.job_id);
    }
    cv_.notify_one();
    return job.job_id;
}

std::optional<JobRecord> JobService::wait(const std::string& job_id, std::chrono::milliseconds timeout) const {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        auto job = store_.get(job_id);
        if (!job || is_terminal(job->state) || std::chrono::steady_clock::now() >= deadline) return job;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
}

void JobService::worker_loop() {
    while (true) {
        std::string id;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
        }
        run_job(id);
    }
}

void JobService::run_job(const std::string& job_id) {
    auto job = store_.get(job_id);
    if (!job) return;
    const auto started = std::chrono::steady_clock::now();
    const auto limit = std::chrono::seconds(runtime_.config().job_store.timeout_seconds);
    try {
        PipelineOptions options = runtime_.pipeline_options();
        if (job->request.contains("overrides")) {
            const auto& o = job->request.at("overrides");
            if (o.contains("k")) options.prompt.retrieval.k = o.at("k").get<std::size_t>();
            if (o.contains("max_healing_iterations")) {
                options.healing.max_iterations = o.at("max_healing_iterations").get<int>();
            }
            if (o.contains("funnel")) options.funnel = o.at("funnel").get<bool>();
        }
        auto backend = runtime_.open_backend();
        const auto res = runtime_.resources(*backend);
        auto on_state = [&](JobState s) {
            if (std::chrono::steady_clock::now() - started > limit) throw Error("job timed out");
            store_.advance(job_id, s);
        };
        const auto& c = job->request.at("criteria");
        PipelineOutput out = c.is_string() ? run_pipeline(c.get<std::string>(), job->strategy, res, options, on_state)
                                           : run_pipeline(criteria_from_json(c), job->strategy, res, options, on_state);
        store_.set_criteria(job_id, to_json(out.criteria));

        json mappings = json::array();
        for (const auto& m : out.mappings) mappings.push_back(to_json(m));
        json attempts = json::array();
        for (const auto& a : out.attempts) attempts.push_back(to_json(a));
        json funnel_sql = json::array();
        for (const auto& q : out.funnel_queries) {
            json qa = json::array();
            for (const auto& a : q.attempts) qa.push_back(to_json(a));
            funnel_sql.push_back({{"criterion_id", q.criterion_id},
                                  {"kind", step_kind_name(q.kind)},
                                  {"generated_sql", q.generated_sql},
                                  {"executable_sql", q.executable_sql},
                                  {"iterations", q.iterations},
                                  {"attempts", qa}});
        }
        json exemplars = json::array();
        for (const auto& e : out.exemplars) {
            exemplars.push_back({{"source", kb_kind_name(e.source)},
                                 {"entry_id", e.entry_id},
                                 {"criterion_id", e.criterion_id},
                                 {"score", e.score}});
        }
        json outputs = {{"cohort_csv", cohort_to_csv(out.cohort)},
                        {"cohort_size", out.cohort.size()},
                        {"funnel", out.funnel ? to_json(*out.funnel) : json(nullptr)},
                        {"sql",
                         {{"generated_sql", out.generated_sql},
                          {"executable_sql", out.executable_sql},
                          {"iterations", out.iterations},
                          {"attempts", attempts},
                          {"funnel", funnel_sql}}},
                        {"mappings", mappings},
                        {"exemplars", exemplars}};
        store_.complete(job_id, outputs);
    } catch (const std::exception& e) {
        store_.fail(job_id, e.what());
    }
}

json job_summary(const JobRecord& job) {
    json j = {{"job_id", job.job_id},
              {"state", job_state_name(job.state)},
              {"strategy", strategy_name(job.strategy)},
              {"created_at", job.created_at},
              {"updated_at", job.updated_at}};
    if (job.criteria) j["criteria"] = *job.criteria;
    if (job.error) j["error"] = *job.error;
    if (job.outputs) {
        j["cohort_size"] = job.outputs->value("cohort_size", 0);
        j["mappings"] = job.outputs->value("mappings", json::array());
    }
    return j;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    send_json(res, status, extra);
}

// Looks up a DONE job; on failure writes the 404/409 response and returns
// nullopt.
std::optional<JobRecord> done_job(JobService& service, const std::string& id, httplib::Response& res) {
    auto job = service.get(id);
    if (!job) {
        send_error(res, 404, "job " + id + " not found");
        return std::nullopt;
    }
    if (job->state != JobState::Done) {
        json extra = {{"state", job_state_name(job->state)}};
        if (job->error) extra["job_error"] = *job->error;
        send_error(res, 409, "job " + id + " is " + std::string(job_state_name(job->state)) + ", not DONE", extra);
        return std::nullopt;
    }
    return job;
}

}  // namespace

void register_routes(httplib::Server& server, JobService& service) {
    server.Post("/jobs", [&service](const httplib::Request& req, httplib::Response& res) {
        json payload;
        try {
            payload = json::parse(req.body);
        } catch (const json::parse_error& e) {
            send_error(res, 400, "invalid request",
                       {{"diagnostics", json::array({{{"field", "body"}, {"message", e.what()}}})}});
            return;
        }
        try {
            const auto id = service.submit(payload);
            send_json(res, 201, {{"job_id", id}, {"state", "QUEUED"}});
        } catch (const RequestError& e) {
            json diags = json::array();
            for (const auto& d : e.diagnostics()) diags.push_back({{"field", d.field}, {"message", d.message}});
            send_error(res, 400, "invalid request", {{"diagnostics", diags}});
        }
    });

    server.Get(R"(/jobs/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto job = service.get(id);
        if (!job) return send_error(res, 404, "job " + id + " not found");
        send_json(res, 200, job_summary(*job));
    });

    server.Get(R"(/jobs/([^/]+)/funnel)", [&service](const httplib::Request& req, httplib::Response& res) {
        auto job = done_job(service, req.matches[1], res);
        if (!job) return;
        const auto& f = job->outputs->at("funnel");
        if (f.is_null()) return send_error(res, 409, "job ran without a funnel");
        send_json(res, 200, f);
    });

    server.Get(R"(/jobs/([^/]+)/cohort)", [&service](const httplib::Request& req, httplib::Response& res) {
        auto job = done_job(service, req.matches[1], res);
        if (!job) return;
        res.status = 200;
        res.set_content(job->outputs->at("cohort_csv").get<std::string>(), "text/csv");
    });

    server.Get(R"(/jobs/([^/]+)/sql)", [&service](const httplib::Request& req, httplib::Response& res) {
        auto job = done_job(service, req.matches[1], res);
        if (!job) return;
        send_json(res, 200, job->outputs->at("sql"));
    });

    server.Get("/kb/stats", [&service](const httplib::Request&, httplib::Response& res) {
        const auto& rt = service.runtime();
        send_json(res, 200, {{"ask", to_json(kb_stats(rt.ask_kb()))}, {"coho", to_json(kb_stats(rt.coho_kb()))}});
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });
}

}  // namespace epicohort
