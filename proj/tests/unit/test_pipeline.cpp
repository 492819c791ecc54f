#include "helpers.hpp"

#include "epicohort/config.hpp"
#include "epicohort/errors.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/pipeline.hpp"
#include "epicohort/placeholder.hpp"
#include "epicohort/text.hpp"

#include <doctest.h>

using namespace epicohort;

TEST_CASE("pipeline on the scripted 4x3 fixture") {
    auto rt = Runtime::create(load_config(testutil::data_path("fixtures/config_mock.json")));
    auto backend = rt->open_backend();
    std::vector<JobState> states;
    const auto out = run_pipeline(text::read_file(testutil::data_path("fixtures/criteria_t2dm_4x3.txt")),
                                  Strategy::RAG_AC, rt->resources(*backend), rt->pipeline_options(),
                                  [&](JobState s) { states.push_back(s); });
    CHECK(out.criteria.inclusion.size() == 4);
    CHECK(out.criteria.exclusion.size() == 3);
    CHECK(out.iterations == 1);
    CHECK(out.attempts.size() == 1);
    CHECK_FALSE(out.exemplars.empty());
    REQUIRE(out.funnel);
    CHECK(out.funnel->steps.size() == 8);
    for (std::size_t i = 1; i < out.funnel->steps.size(); ++i) {
        CHECK(out.funnel->steps[i].remaining_count <= out.funnel->steps[i - 1].remaining_count);
    }
    CHECK(out.funnel->final_cohort == out.cohort);
    CHECK(parse_placeholders(out.executable_sql).empty());
    for (std::size_t i = 1; i < states.size(); ++i) CHECK(static_cast<int>(states[i]) > static_cast<int>(states[i - 1]));
    CHECK(states.front() == JobState::Parsing);
    CHECK(states.back() == JobState::Funneling);
}

TEST_CASE("exclusions-first order gives the same final cohort") {
    auto rt = Runtime::create(load_config(testutil::data_path("fixtures/config_mock.json")));
    auto backend = rt->open_backend();
    const auto criteria = text::read_file(testutil::data_path("fixtures/criteria_t2dm_4x3.txt"));
    auto opts = rt->pipeline_options();
    const auto a = run_pipeline(criteria, Strategy::ZS, rt->resources(*backend), opts);
    opts.exclusions_first = true;
    const auto b = run_pipeline(criteria, Strategy::ZS, rt->resources(*backend), opts);
    CHECK(b.funnel->steps[1].kind == StepKind::Exclusion);
    CHECK(a.funnel->final_cohort == b.funnel->final_cohort);
}

TEST_CASE("concept resolver caches per term") {
    HashingEmbedder emb;
    const auto vocab = VocabularyIndex::build(testutil::fixture_vocabulary(), emb);
    ConceptResolver r(vocab, nullptr, {});
    CHECK(r.resolve("IN ([condition@hypertension]) AND IN ([condition@Hypertension])") == "IN (316866) AND IN (316866)");
    CHECK(r.mappings().size() == 1);
    CHECK_THROWS_AS(r.resolve("IN ([condition@zzqxv])"), ResolutionError);
}

TEST_CASE("missing mandatory resources is a configuration error") {
    PipelineResources res;
    CHECK_THROWS_AS(run_pipeline("Index date: x\nInclusion:\n- y\n", Strategy::ZS, res, {}), ConfigError);
}

TEST_CASE("job state names") {
    CHECK(job_state_name(JobState::Queued) == "QUEUED");
    CHECK(parse_job_state("funneling") == JobState::Funneling);
    CHECK(is_terminal(JobState::Done));
    CHECK(is_terminal(JobState::Failed));
    CHECK_FALSE(is_terminal(JobState::Healing));
}

TEST_CASE("every fixture KB query resolves and executes on the synthetic DB") {
    auto rt = Runtime::create(load_config(testutil::data_path("fixtures/config_mock.json")));
    auto backend = rt->open_backend();
    const auto res = rt->resources(*backend);
    ConceptResolver resolver(*res.vocab, nullptr, {});
    for (const auto* kb : {&rt->ask_kb(), &rt->coho_kb()}) {
        for (const auto& e : *kb) {
            INFO(e.id);
            std::string sql;
            CHECK_NOTHROW(sql = resolver.resolve(e.sql));
            CHECK_NOTHROW(backend->execute(sql));
        }
    }
}
