#include "helpers.hpp"

#include "epicohort/config.hpp"
#include "epicohort/errors.hpp"
#include "epicohort/llm.hpp"
#include "epicohort/text.hpp"

#include <doctest.h>

using namespace epicohort;

namespace {

nlohmann::json mock_config() {
    return nlohmann::json::parse(text::read_file(testutil::data_path("fixtures/config_mock.json")));
}

std::string fixtures_dir() { return testutil::data_path("fixtures"); }

}  // namespace

TEST_CASE("fixture config loads with paths relative to the file") {
    const auto cfg = load_config(testutil::data_path("fixtures/config_mock.json"));
    CHECK(cfg.llm.kind == "mock");
    CHECK(std::filesystem::exists(cfg.llm.transcript));
    CHECK(std::filesystem::exists(cfg.vocab_concepts));
    CHECK(cfg.backend.synthetic);
    CHECK(cfg.backend.synthetic->seed == 7);
    CHECK(cfg.k == 5);
    CHECK(cfg.max_healing_iterations == 3);
    CHECK_FALSE(cfg.exclusions_first);
}

TEST_CASE("config errors name the key") {
    auto j = mock_config();
    j["llm"]["api_key"] = "sk-secret";
    CHECK_THROWS_WITH_AS(parse_config(j, fixtures_dir()), doctest::Contains("api_key"), ConfigError);

    j = mock_config();
    j["backend"]["engine"] = "snowflake";
    CHECK_THROWS_WITH_AS(parse_config(j, fixtures_dir()), doctest::Contains("backend.engine"), ConfigError);

    j = mock_config();
    j["retrieval"]["k"] = 0;
    CHECK_THROWS_WITH_AS(parse_config(j, fixtures_dir()), doctest::Contains("retrieval.k"), ConfigError);

    j = mock_config();
    j.erase("vocabulary");
    CHECK_THROWS_AS(parse_config(j, fixtures_dir()), ConfigError);

    j = mock_config();
    j["funnel"] = {{"order", "exclusions_first"}};
    CHECK(parse_config(j, fixtures_dir()).exclusions_first);
    j["funnel"] = {{"order", "random"}};
    CHECK_THROWS_AS(parse_config(j, fixtures_dir()), ConfigError);

    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("mock LLM lookup order") {
    MockLlmProvider::Entry ordinal1{std::nullopt, std::nullopt, "first"};
    MockLlmProvider::Entry ordinal2{std::nullopt, std::nullopt, "second"};
    MockLlmProvider::Entry match{std::nullopt, std::string("TASK: REPAIR"), "fixed"};
    LlmRequest special;
    special.messages = {{"user", "fingerprinted"}};
    MockLlmProvider::Entry fp{request_fingerprint(special), std::nullopt, "by fingerprint"};
    MockLlmProvider mock({ordinal1, match, ordinal2, fp});

    LlmRequest repair;
    repair.messages = {{"system", "s"}, {"user", "TASK: REPAIR\nquery"}};
    CHECK(mock.complete(special) == "by fingerprint");
    CHECK(mock.complete(repair) == "fixed");
    CHECK(mock.complete(repair) == "fixed");
    LlmRequest other;
    other.messages = {{"user", "anything"}};
    CHECK(mock.complete(other) == "first");
    CHECK(mock.complete(other) == "second");
    CHECK_THROWS_AS(mock.complete(other), ProviderError);
    CHECK(mock.call_count() == 6);
    CHECK(mock.requests().size() == 6);
}

TEST_CASE("fingerprints depend on roles and text") {
    LlmRequest a, b;
    a.messages = {{"user", "x"}};
    b.messages = {{"system", "x"}};
    CHECK(request_fingerprint(a) != request_fingerprint(b));
    CHECK(request_fingerprint(a) == request_fingerprint(a));
}

TEST_CASE("mock transcript fixture parses") {
    auto mock = MockLlmProvider::from_file(testutil::data_path("fixtures/mock_transcript_t2dm.json"));
    CHECK(mock->name() == "mock");
    CHECK_THROWS_AS(MockLlmProvider::from_json(nlohmann::json(42)), Error);
}

TEST_CASE("http provider body and response parsing") {
    LlmRequest r;
    r.messages = {{"system", "s"}, {"user", "u"}};
    r.params.temperature = 0.0;
    const auto body = HttpLlmProvider::build_body("gpt-4o", r);
    CHECK(body["model"] == "gpt-4o");
    CHECK(body["messages"].size() == 2);
    CHECK(body["temperature"] == 0.0);
    CHECK(HttpLlmProvider::parse_response(R"({"choices":[{"message":{"content":"SELECT 1"}}]})") == "SELECT 1");
    CHECK_THROWS_AS(HttpLlmProvider::parse_response("{}"), ProviderError);
    CHECK_THROWS_AS(HttpLlmProvider::parse_response("not json"), ProviderError);
}
