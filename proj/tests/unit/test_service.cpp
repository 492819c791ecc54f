#include "helpers.hpp"

#include "epicohort/config.hpp"
#include "epicohort/errors.hpp"
#include "epicohort/service.hpp"
#include "epicohort/text.hpp"

#include <doctest.h>
#include <httplib.h>

#include <thread>

using namespace epicohort;
using nlohmann::json;

namespace {

const char* kCriteria3x2 =
    "Index date: first diagnosis of type 2 diabetes mellitus\n"
    "Inclusion:\n"
    "- Diagnosis of type 2 diabetes mellitus\n"
    "- Age 18 years or older at the index date\n"
    "- At least one prescription of metformin on or after the index date\n"
    "Exclusion:\n"
    "- Diagnosis of chronic kidney disease before the index date\n"
    "- Use of sitagliptin before the index date\n";

// Service plus HTTP server on an ephemeral port, torn down in order.
struct Harness {
    testutil::TempDir dir;
    std::unique_ptr<Runtime> rt;
    std::unique_ptr<JobStore> store;
    std::unique_ptr<JobService> service;
    httplib::Server server;
    std::thread thread;
    int port = 0;

    Harness() {
        auto j = json::parse(text::read_file(testutil::data_path("fixtures/config_mock.json")));
        j["job_store"]["path"] = dir.file("jobs.db");
        rt = Runtime::create(parse_config(j, testutil::data_path("fixtures")));
        store = std::make_unique<JobStore>(rt->config().job_store.path);
        service = std::make_unique<JobService>(*rt, *store);
        register_routes(server, *service);
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~Harness() {
        server.stop();
        thread.join();
        service->shutdown();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(30, 0);
        return c;
    }
};

std::string submit(httplib::Client& c, const json& body) {
    auto res = c.Post("/jobs", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 201);
    return json::parse(res->body).at("job_id").get<std::string>();
}

}  // namespace

TEST_CASE("job lifecycle over HTTP") {
    Harness h;
    auto c = h.client();

    auto health = c.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);

    const auto id = submit(c, {{"criteria", kCriteria3x2}, {"strategy", "rag_ac"}});

    // Poll; states must never move backwards.
    int last = -1;
    std::string state;
    for (int i = 0; i < 600; ++i) {
        auto r = c.Get("/jobs/" + id);
        REQUIRE(r);
        REQUIRE(r->status == 200);
        state = json::parse(r->body).at("state").get<std::string>();
        const int rank = static_cast<int>(*parse_job_state(state));
        CHECK(rank >= last);
        last = rank;
        if (state == "DONE" || state == "FAILED") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    REQUIRE(state == "DONE");

    auto funnel = c.Get("/jobs/" + id + "/funnel");
    REQUIRE(funnel);
    CHECK(funnel->status == 200);
    const auto f = json::parse(funnel->body);
    CHECK(f.at("steps").size() == 6);

    auto cohort = c.Get("/jobs/" + id + "/cohort");
    REQUIRE(cohort);
    CHECK(cohort->status == 200);
    CHECK(cohort->get_header_value("Content-Type").find("text/csv") == 0);
    CHECK(cohort->body.rfind("person_id,index_date\n", 0) == 0);
    auto summary = json::parse(c.Get("/jobs/" + id)->body);
    CHECK(cohort_from_csv(cohort->body).size() == summary.at("cohort_size").get<std::size_t>());

    auto sql = c.Get("/jobs/" + id + "/sql");
    REQUIRE(sql);
    CHECK(sql->status == 200);
    CHECK(json::parse(sql->body).at("funnel").size() == 6);

    // Resubmitting the same payload makes a new job.
    const auto again = submit(c, {{"criteria", kCriteria3x2}, {"strategy", "rag_ac"}});
    CHECK(again != id);
    CHECK(h.service->wait(again, std::chrono::seconds(30))->state == JobState::Done);

    auto stats = c.Get("/kb/stats");
    REQUIRE(stats);
    CHECK(json::parse(stats->body).at("ask").at("global").at("n_samples") == h.rt->ask_kb().size());
}

TEST_CASE("not found, conflict and bad requests") {
    Harness h;
    auto c = h.client();

    auto missing = c.Get("/jobs/nope/cohort");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(c.Get("/jobs/nope")->status == 404);

    // A record no worker will pick up stays QUEUED.
    JobRecord queued;
    queued.job_id = "queued-job";
    queued.request = {{"criteria", kCriteria3x2}};
    h.store->insert(queued);
    auto conflict = c.Get("/jobs/queued-job/cohort");
    REQUIRE(conflict);
    CHECK(conflict->status == 409);
    CHECK(json::parse(conflict->body).at("state") == "QUEUED");

    auto empty = c.Post("/jobs", json{{"criteria", "  "}}.dump(), "application/json");
    REQUIRE(empty);
    CHECK(empty->status == 400);
    CHECK(json::parse(empty->body).at("diagnostics").at(0).at("field") == "criteria");

    auto bad_strategy = c.Post("/jobs", json{{"criteria", kCriteria3x2}, {"strategy", "few"}}.dump(), "application/json");
    REQUIRE(bad_strategy);
    CHECK(bad_strategy->status == 400);
    CHECK(bad_strategy->body.find("rag_ac") != std::string::npos);

    auto not_json = c.Post("/jobs", "{", "application/json");
    REQUIRE(not_json);
    CHECK(not_json->status == 400);
}

TEST_CASE("job store moves forward only") {
    testutil::TempDir dir;
    JobStore store(dir.file("jobs.db"));
    JobRecord r;
    r.job_id = "a";
    r.request = json::object();
    store.insert(r);
    CHECK(store.advance("a", JobState::Generating));
    CHECK_FALSE(store.advance("a", JobState::Parsing));
    CHECK(store.get("a")->state == JobState::Generating);
    store.complete("a", {{"cohort_csv", "person_id,index_date\n"}});
    CHECK(store.get("a")->state == JobState::Done);
    CHECK_FALSE(store.advance("a", JobState::Funneling));
    CHECK_FALSE(store.get("missing"));

    JobRecord b;
    b.job_id = "b";
    b.request = json::object();
    store.insert(b);
    CHECK(store.fail_unfinished("restart") == 1);
    CHECK(store.get("b")->state == JobState::Failed);
    CHECK(store.get("b")->error == "restart");
}

TEST_CASE("failed jobs carry their error") {
    Harness h;
    auto c = h.client();
    // The scripted cohort query is broken; with no repair allowed the job fails.
    const auto id = submit(c, {{"criteria", kCriteria3x2}, {"overrides", {{"max_healing_iterations", 0}}}});
    const auto job = h.service->wait(id, std::chrono::seconds(30));
    REQUIRE(job);
    CHECK(job->state == JobState::Failed);
    REQUIRE(job->error);
    auto r = c.Get("/jobs/" + id + "/funnel");
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(json::parse(r->body).contains("job_error"));
}
