#pragma once

#include "epicohort/config.hpp"
#include "epicohort/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

struct sqlite3;

namespace httplib {
class Server;
}

namespace epicohort {

struct JobRecord {
    std::string job_id;
    JobState state = JobState::Queued;
    Strategy strategy = Strategy::RAG_AC;
    nlohmann::json request;            // the submitted payload
    std::optional<nlohmann::json> criteria;  // parsed, once PARSING is done
    std::optional<nlohmann::json> outputs;   // present iff DONE
    std::optional<std::string> error;        // present iff FAILED
    std::int64_t created_at = 0;       // unix seconds
    std::int64_t updated_at = 0;
};

// Jobs persisted in SQLite. Writes are serialized; state only moves
// forward in the declared order, with FAILED reachable from any
// non-terminal state.
class JobStore {
public:
    explicit JobStore(const std::string& path);
    ~JobStore();
    JobStore(const JobStore&) = delete;
    JobStore& operator=(const JobStore&) = delete;

    void insert(const JobRecord& job);
    std::optional<JobRecord> get(const std::string& job_id) const;
    // Returns false (and changes nothing) when the move would go backwards
    // or the job is already terminal.
    bool advance(const std::string& job_id, JobState state);
    void set_criteria(const std::string& job_id, const nlohmann::json& criteria);
    void complete(const std::string& job_id, const nlohmann::json& outputs);
    void fail(const std::string& job_id, const std::string& error);
    // Marks jobs left in a non-terminal state as FAILED; returns their count.
    std::size_t fail_unfinished(const std::string& reason);
    std::size_t purge_older_than(int days);
    std::vector<std::string> job_ids() const;

private:
    void exec(const std::string& sql, const std::vector<std::string>& params) const;

    mutable std::mutex mu_;
    sqlite3* db_ = nullptr;
};

class JobService {
public:
    JobService(const Runtime& runtime, JobStore& store);
    ~JobService();
    JobService(const JobService&) = delete;
    JobService& operator=(const JobService&) = delete;

    // Validates and queues. Throws RequestError with field diagnostics.
    std::string submit(const nlohmann::json& payload);
    std::optional<JobRecord> get(const std::string& job_id) const { return store_.get(job_id); }
    // Blocks until the job is terminal or the timeout passes.
    std::optional<JobRecord> wait(const std::string& job_id, std::chrono::milliseconds timeout) const;
    void shutdown();

    const Runtime& runtime() const { return runtime_; }

private:
    void worker_loop();
    void run_job(const std::string& job_id);

    const Runtime& runtime_;
    JobStore& store_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

nlohmann::json job_summary(const JobRecord& job);

// POST /jobs, GET /jobs/{id}, /jobs/{id}/funnel, /jobs/{id}/cohort,
// /jobs/{id}/sql, GET /kb/stats, GET /healthz.
void register_routes(httplib::Server& server, JobService& service);

}  // namespace epicohort
