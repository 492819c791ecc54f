// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include "epicohort/backend.hpp"
#include "epicohort/cohort.hpp"
#include "epicohort/config.hpp"
#include "epicohort/errors.hpp"
#include "epicohort/eval.hpp"
#include "epicohort/generation.hpp"
#include "epicohort/kb.hpp"
#include "epicohort/normalize.hpp"
#include "epicohort/pipeline.hpp"
#include "epicohort/placeholder.hpp"
#include "epicohort/retrieval.hpp"
#include "epicohort/sql_analyzer.hpp"
#include "epicohort/synthetic.hpp"
#include "epicohort/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

using namespace epicohort;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string data_path(const std::string& rel) { return std::string(EPICOHORT_DATA_DIR) + "/" + rel; }

std::string fmt(double v, int precision = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Metric oracle

// Days since 1970-01-01 for a proleptic Gregorian date, by the civil
// calendar algorithm; independent of std::chrono.
long civil_days(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

struct PlainRow {
    std::int64_t person;
    int y;
    unsigned m, d;
};

struct OracleMetrics {
    double precision, recall, f1, size_sim, exact, within;
};

// Quadratic scans over plain rows.
OracleMetrics brute_force(const std::vector<PlainRow>& g, const std::vector<PlainRow>& r, long window) {
    double matched = 0, exact = 0, within = 0;
    for (const auto& a : g) {
        for (const auto& b : r) {
            if (a.person != b.person) continue;
            matched += 1;
            const long diff = std::labs(civil_days(a.y, a.m, a.d) - civil_days(b.y, b.m, b.d));
            if (diff == 0) exact += 1;
            if (diff <= window) within += 1;
        }
    }
    OracleMetrics o{};
    const double ng = static_cast<double>(g.size()), nr = static_cast<double>(r.size());
    o.precision = ng == 0 ? 0.0 : matched / ng;
    o.recall = nr == 0 ? 0.0 : matched / nr;
    o.f1 = (o.precision + o.recall) == 0 ? 0.0 : 2 * o.precision * o.recall / (o.precision + o.recall);
    if (ng == 0 && nr == 0) {
        o.size_sim = 1.0;
    } else {
        o.size_sim = std::min(ng, nr) / std::max(ng, nr);
    }
    o.exact = matched == 0 ? 0.0 : exact / matched;
    o.within = matched == 0 ? 0.0 : within / matched;
    return o;
}

std::vector<PlainRow> random_rows(std::mt19937_64& rng, std::size_t n, std::int64_t pool) {
    std::vector<std::int64_t> ids(static_cast<std::size_t>(pool));
    for (std::int64_t i = 0; i < pool; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<PlainRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = 2015 + static_cast<int>(rng() % 8);
        const unsigned m = 1 + static_cast<unsigned>(rng() % 12);
        const unsigned d = 1 + static_cast<unsigned>(rng() % 28);
        rows.push_back({ids[i], y, m, d});
    }
    return rows;
}

// Nudges some of r's dates so exact and near matches both occur.
void correlate(std::mt19937_64& rng, const std::vector<PlainRow>& g, std::vector<PlainRow>& r) {
    for (auto& b : r) {
        for (const auto& a : g) {
            if (a.person != b.person || rng() % 3 == 0) continue;
            b = a;
            b.d = std::clamp<unsigned>(a.d + static_cast<unsigned>(rng() % 3) * 14, 1, 28);
        }
    }
}

Cohort to_cohort(const std::vector<PlainRow>& rows) {
    Cohort c;
    for (const auto& r : rows) {
        c.rows[r.person] = Date{std::chrono::year{r.y}, std::chrono::month{r.m}, std::chrono::day{r.d}};
    }
    return c;
}

Verdict metric_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240501);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t pool = 1 + static_cast<std::int64_t>(rng() % 250);
        const std::size_t cap = static_cast<std::size_t>(std::min<std::int64_t>(pool, 200));
        auto g = random_rows(rng, rng() % (cap + 1), pool);
        auto r = random_rows(rng, rng() % (cap + 1), pool);
        correlate(rng, g, r);
        const long window = static_cast<long>(rng() % 61);
        const auto o = brute_force(g, r, window);
        const auto gc = to_cohort(g), rc = to_cohort(r);
        const auto pm = patient_metrics(gc, rc);
        const auto dm = date_metrics(gc, rc, window);
        for (double diff : {pm.precision - o.precision, pm.recall - o.recall, pm.f1 - o.f1,
                            size_similarity(gc, rc) - o.size_sim, dm.exact - o.exact,
                            dm.within_window - o.within}) {
            worst = std::max(worst, std::abs(diff));
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 5.0,
            "1000 pairs, max |diff| " + sci(worst) + ", " + fmt(secs) + " s (limit 5 s)"};
}

// ---------------------------------------------------------------------------
// Funnel vs monolithic

Verdict funnel_correctness() {
    const auto t0 = Clock::now();
    auto rt = Runtime::create(load_config(data_path("fixtures/config_mock.json")));
    auto backend = rt->open_backend();
    const auto persons = std::get<std::int64_t>(backend->execute("SELECT COUNT(*) FROM person").rows.at(0).at(0));
    const auto out = run_pipeline(text::read_file(data_path("fixtures/criteria_t2dm_4x3.txt")), Strategy::RAG_AC,
                                  rt->resources(*backend), rt->pipeline_options());
    const double secs = seconds_since(t0);
    if (!out.funnel) return {false, "no funnel produced"};
    const double sim = funnel_similarity(out.funnel->final_cohort, out.cohort);
    std::string counts;
    for (const auto& s : out.funnel->steps) counts += (counts.empty() ? "" : " > ") + std::to_string(s.remaining_count);
    const bool equal = out.funnel->final_cohort == out.cohort;
    return {persons == 1000 && sim == 1.0 && equal && secs < 30.0,
            std::to_string(persons) + " persons, funnel " + counts + ", monolithic " +
                std::to_string(out.cohort.size()) + ", similarity " + fmt(sim) +
                (equal ? ", cohorts identical" : ", cohorts differ") + ", " + fmt(secs) + " s (limit 30 s)"};
}

// ---------------------------------------------------------------------------
// Self-healing contract

std::string fenced(const std::string& sql) { return "```sql\n" + sql + "\n```"; }

Verdict self_healing() {
    SqliteBackend db(":memory:");
    SyntheticDbSpec spec;
    spec.seed = 3;
    spec.n_persons = 200;
    generate_synthetic_omop(spec, db);
    const PromptOptions popts;
    const HealingConfig hcfg{3};
    std::vector<std::string> problems;

    const std::vector<std::string> valid = {
        "SELECT person_id FROM person",
        "SELECT person_id, MIN(condition_start_date) AS index_date FROM condition_occurrence GROUP BY person_id",
        "SELECT COUNT(*) FROM drug_exposure d JOIN person p ON p.person_id = d.person_id",
    };
    FunctionLlmProvider unused([](const LlmRequest&) -> std::string { throw Error("repair requested for valid SQL"); });
    for (const auto& sql : valid) {
        try {
            if (self_heal(sql, db, unused, hcfg, popts).iterations != 0) problems.push_back("valid input used repairs");
        } catch (const std::exception& e) {
            problems.push_back(std::string("valid input failed: ") + e.what());
        }
    }

    // (broken, fixed, repairs the scripted fixer needs before it answers correctly)
    struct Fixable {
        std::string broken;
        std::string fixed;
        int needed;
    };
    const std::vector<Fixable> fixable = {
        {"SELECT person_id FROM persn", "SELECT person_id FROM person", 1},
        {"SELECT person_id, MIN(condition_start_dat) AS index_date FROM condition_occurrence GROUP BY person_id",
         "SELECT person_id, MIN(condition_start_date) AS index_date FROM condition_occurrence GROUP BY person_id", 2},
        {"SELEC person_id FROM drug_exposure", "SELECT person_id FROM drug_exposure", 3},
    };
    int healed = 0;
    for (const auto& f : fixable) {
        int calls = 0;
        bool prompts_ok = true;
        std::string last_sql = f.broken;
        FunctionLlmProvider fixer([&](const LlmRequest& req) {
            ++calls;
            const auto& prompt = req.messages.back().text;
            prompts_ok = prompts_ok && prompt.find(last_sql) != std::string::npos;
            last_sql = calls >= f.needed ? f.fixed : f.broken + " /* try " + std::to_string(calls) + " */";
            return fenced(last_sql);
        });
        try {
            const auto out = self_heal(f.broken, db, fixer, hcfg, popts);
            if (out.iterations != f.needed) problems.push_back("fixable input took " + std::to_string(out.iterations));
            else if (!prompts_ok) problems.push_back("repair prompt lacked the failing SQL");
            else if (out.attempts.size() != static_cast<std::size_t>(f.needed)) problems.push_back("attempt history");
            else ++healed;
        } catch (const std::exception& e) {
            problems.push_back(std::string("fixable input failed: ") + e.what());
        }
    }

    int failed_exactly = 0;
    const std::vector<std::string> hopeless = {"SELECT person_id FROM no_such_table", "SELECT FROMM x",
                                               "SELECT person_id, index_date FROM person"};
    for (const auto& sql : hopeless) {
        int calls = 0;
        FunctionLlmProvider never([&](const LlmRequest&) {
            ++calls;
            return fenced(sql);
        });
        try {
            self_heal(sql, db, never, hcfg, popts);
            problems.push_back("never-fixable input succeeded");
        } catch (const HealingFailure& e) {
            if (e.iterations() == 3 && calls == 3 && e.attempts().size() == 4) ++failed_exactly;
            else problems.push_back("never-fixable input stopped after " + std::to_string(e.iterations()));
        }
    }

    // Through the evaluation path: a sample whose generated SQL never heals
    // scores zero everywhere.
    HashingEmbedder emb;
    const auto vocab = VocabularyIndex::build(
        load_vocabulary(data_path("vocab/CONCEPT.csv"), data_path("vocab/CONCEPT_SYNONYM.csv")), emb);
    const auto coho = load_kb(data_path("kb/coho_fixture.jsonl"), KBKind::Coho);
    auto samples = samples_from_kb(coho);
    samples.resize(1);
    FunctionLlmProvider broken([](const LlmRequest&) { return fenced("SELECT person_id, index_date FROM nowhere"); });
    PipelineResources res;
    res.llm = &broken;
    res.vocab = &vocab;
    res.backend = &db;
    EvalConfig ecfg;
    ecfg.strategies = {Strategy::ZS};
    const auto report = run_eval(samples, res, ecfg, {});
    bool zero = false;
    if (report.strategies.size() == 1 && report.strategies[0].samples.size() == 1) {
        const auto& r = report.strategies[0].samples[0];
        zero = !r.valid_sql && !r.retrieved && r.precision == 0 && r.recall == 0 && r.f1 == 0 &&
               r.size_similarity == 0 && r.date_exact == 0 && r.date_within_window == 0;
    }
    if (!zero) problems.push_back("unhealable sample did not score all zeros");

    std::string detail = std::to_string(valid.size()) + " valid at 0 iterations, " + std::to_string(healed) + "/" +
                         std::to_string(fixable.size()) + " fixable healed at 1/2/3, " +
                         std::to_string(failed_exactly) + "/" + std::to_string(hopeless.size()) +
                         " hopeless failed after exactly 3, zero-scored sample " + (zero ? "yes" : "no");
    for (const auto& p : problems) detail += "; " + p;
    return {problems.empty(), detail};
}

// ---------------------------------------------------------------------------
// Released knowledge bases

struct ReleasedKbs {
    std::string dir;
    std::string ask;
    std::string coho;
    bool present() const { return fs::exists(ask) && fs::exists(coho); }
};

ReleasedKbs released_kbs() {
    ReleasedKbs r;
    const char* env = std::getenv("EPICOHORT_RELEASED_KB_DIR");
    r.dir = env && *env ? env : data_path("released");
    r.ask = r.dir + "/ask.jsonl";
    r.coho = r.dir + "/coho.jsonl";
    return r;
}

std::string missing_note(const ReleasedKbs& r) {
    return "released KB files not found (" + r.ask + ", " + r.coho +
           "); set EPICOHORT_RELEASED_KB_DIR to a directory holding ask.jsonl and coho.jsonl";
}

// retrieve(k = |index|) against brute-force cosine on random stored vectors.
bool random_index_property(std::string& detail) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    HashingEmbedder emb(8);
    int mismatches = 0;
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 1 + rng() % 30;
        std::vector<KBEntry> entries;
        for (std::size_t i = 0; i < n; ++i) {
            KBEntry e;
            e.id = "r" + std::to_string(round) + "-" + std::to_string(i);
            e.natural_text = e.masked_text = "entry " + std::to_string(i);
            e.sql = "SELECT 1";
            Vector v(8);
            for (auto& x : v) x = normal(rng);
            // Some duplicates so ties are exercised.
            if (i > 0 && rng() % 5 == 0) v = *entries[rng() % i].embedding;
            e.embedding = v;
            entries.push_back(e);
        }
        Vector q(8);
        for (auto& x : q) x = normal(rng);
        const auto idx = VectorIndex::build(entries, emb);
        const auto hits = idx.retrieve_vector(q, {n, {}});

        std::vector<std::pair<double, std::string>> oracle;
        for (const auto& e : entries) {
            double num = 0, a = 0, b = 0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                num += (*e.embedding)[i] * q[i];
                a += (*e.embedding)[i] * (*e.embedding)[i];
                b += q[i] * q[i];
            }
            oracle.push_back({num / std::sqrt(a * b), e.id});
        }
        std::sort(oracle.begin(), oracle.end(), [](const auto& x, const auto& y) {
            if (std::abs(x.first - y.first) > 1e-12) return x.first > y.first;
            return x.second < y.second;
        });
        if (hits.size() != oracle.size()) {
            ++mismatches;
            continue;
        }
        for (std::size_t i = 0; i < hits.size(); ++i) {
            if (hits[i].entry_id != oracle[i].second || std::abs(hits[i].score - oracle[i].first) > 1e-9) {
                ++mismatches;
                break;
            }
        }
    }
    detail = "50 random indexes vs brute force: " + std::to_string(mismatches) + " mismatches";
    return mismatches == 0;
}

Verdict retrieval_loo() {
    std::string random_detail;
    const bool random_ok = random_index_property(random_detail);
    const auto kbs = released_kbs();
    if (!kbs.present()) return {false, random_detail + "; " + missing_note(kbs)};

    HashingEmbedder emb;
    int checked = 0, not_first = 0, leaked = 0;
    for (const auto& [path, kind] : {std::pair{kbs.ask, KBKind::Ask}, std::pair{kbs.coho, KBKind::Coho}}) {
        const auto entries = load_kb(path, kind);
        const auto idx = VectorIndex::build(entries, emb);
        for (const auto& e : entries) {
            ++checked;
            const auto hits = idx.retrieve(e.masked_text, {5, {}});
            // Entries with identical masked text tie at the top; any of them may lead.
            const bool first = !hits.empty() && hits[0].score >= 0.999 &&
                               std::any_of(hits.begin(), hits.end(), [&](const RetrievalHit& h) {
                                   return h.entry_id == e.id && h.score >= hits[0].score - 1e-12;
                               });
            if (!first) ++not_first;
            const auto loo = idx.retrieve(e.masked_text, {5, {e.id}});
            if (std::any_of(loo.begin(), loo.end(), [&](const RetrievalHit& h) { return h.entry_id == e.id; })) {
                ++leaked;
            }
        }
    }
    return {random_ok && not_first == 0 && leaked == 0,
            std::to_string(checked) + " entries, " + std::to_string(not_first) + " not ranked first, " +
                std::to_string(leaked) + " leaked under leave-one-out; " + random_detail};
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol * target; }

Verdict kb_reproduction() {
    const auto kbs = released_kbs();
    if (!kbs.present()) return {false, missing_note(kbs)};
    struct Target {
        std::string path;
        KBKind kind;
        int n;
        double joins, tables, logical;
    };
    const std::vector<Target> targets = {{kbs.ask, KBKind::Ask, 115, 1.9, 2.3, 5.8},
                                         {kbs.coho, KBKind::Coho, 108, 14.6, 5.3, 32.2}};
    bool ok = true;
    std::string detail;
    for (const auto& t : targets) {
        std::vector<KBEntry> entries;
        try {
            entries = load_kb(t.path, t.kind);
        } catch (const std::exception& e) {
            return {false, std::string(kb_kind_name(t.kind)) + ": " + e.what()};
        }
        const auto s = kb_stats(entries);
        const bool count_ok = static_cast<int>(entries.size()) == t.n;
        const bool all_ok = s.n_analyzed == s.n_samples;
        const bool j = within(s.joins.mean, t.joins, 0.2);
        const bool tb = within(s.tables_referenced.mean, t.tables, 0.2);
        const bool lg = within(s.logical_conditions.mean, t.logical, 0.2);
        ok = ok && count_ok && all_ok && j && tb && lg;
        detail += std::string(detail.empty() ? "" : "; ") + std::string(kb_kind_name(t.kind)) + " n=" +
                  std::to_string(entries.size()) + "/" + std::to_string(t.n) + " analyzed " +
                  std::to_string(s.n_analyzed) + " joins " + fmt(s.joins.mean, 2) + " vs " + fmt(t.joins, 1) +
                  " tables " + fmt(s.tables_referenced.mean, 2) + " vs " + fmt(t.tables, 1) + " logical " +
                  fmt(s.logical_conditions.mean, 2) + " vs " + fmt(t.logical, 1);
    }
    return {ok, detail + " (tolerance 20%, distinct-table counting)"};
}

// ---------------------------------------------------------------------------
// Placeholder round trip

Verdict placeholder_round_trip() {
    std::mt19937_64 rng(9001);
    const std::vector<std::string> fragments = {
        "SELECT person_id FROM condition_occurrence WHERE condition_concept_id IN (",
        ") AND person_id IN (SELECT person_id FROM drug_exposure WHERE drug_concept_id IN (",
        ")) ",
        " OR x.measurement_concept_id IN (",
        " -- note [person] and user@example.org\n",
        " AND note = 'a@b' AND [visit id] > 3 AND y IN (",
        "\tWHERE\n",
        " ",
    };
    const std::vector<Domain> domains(std::begin(kAllDomains), std::end(kAllDomains));
    const std::string term_chars = "abcdefghij klmnopq-rstuv0123456789'/()";
    int failures = 0;
    for (int t = 0; t < 500; ++t) {
        std::string sql, expected;
        std::vector<ConceptMapping> mappings;
        std::size_t injected = 0;
        const int parts = 1 + static_cast<int>(rng() % 8);
        for (int p = 0; p < parts; ++p) {
            const auto& frag = fragments[rng() % fragments.size()];
            sql += frag;
            expected += frag;
            if (rng() % 4 == 0) continue;
            const Domain d = domains[rng() % domains.size()];
            std::string term;
            const int len = 1 + static_cast<int>(rng() % 20);
            for (int i = 0; i < len; ++i) term += term_chars[rng() % term_chars.size()];
            if (text::trim(term).empty()) term = "x" + term;
            ConceptMapping m;
            m.term = std::string(text::trim(term));
            m.domain = d;
            const auto id = static_cast<std::int64_t>(1000 + rng() % 100000);
            m.candidates = {{id, 1.0}};
            m.chosen = {id};
            if (rng() % 3 == 0) m.chosen.push_back(id + 1);
            std::string ids;
            for (std::size_t i = 0; i < m.chosen.size(); ++i) ids += (i ? ", " : "") + std::to_string(m.chosen[i]);
            // Same (domain, term) must map the same way; the first mapping wins.
            const auto key = text::to_lower(m.term);
            auto prior = std::find_if(mappings.begin(), mappings.end(), [&](const ConceptMapping& x) {
                return x.domain == d && text::to_lower(x.term) == key;
            });
            if (prior != mappings.end()) {
                ids.clear();
                for (std::size_t i = 0; i < prior->chosen.size(); ++i)
                    ids += (i ? ", " : "") + std::to_string(prior->chosen[i]);
            } else {
                mappings.push_back(m);
            }
            sql += "[" + std::string(domain_surface(d)) + "@" + term + "]";
            expected += ids;
            ++injected;
        }
        try {
            const auto found = parse_placeholders(sql);
            const auto resolved = resolve_placeholders(sql, mappings);
            if (found.size() != injected || !parse_placeholders(resolved).empty() || resolved != expected) ++failures;
        } catch (const std::exception&) {
            ++failures;
        }
    }
    return {failures == 0, "500 templates, " + std::to_string(failures) + " failures"};
}

// ---------------------------------------------------------------------------
// Hermetic CLI run

Verdict hermetic_cli() {
    const fs::path out = fs::temp_directory_path() / ("epicohort_accept_" + std::to_string(::getpid()));
    fs::remove_all(out);
    const std::string cmd = std::string("\"") + EPICOHORT_CLI + "\" generate --config \"" +
                            data_path("fixtures/config_mock.json") + "\" --criteria \"" +
                            data_path("fixtures/criteria_t2dm_4x3.txt") + "\" --out-dir \"" + out.string() +
                            "\" > \"" + (fs::temp_directory_path() / "epicohort_accept.log").string() + "\" 2>&1";
    const auto t0 = Clock::now();
    const int rc = std::system(cmd.c_str());
    const double secs = seconds_since(t0);
    const int status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    const bool cohort_ok = fs::exists(out / "cohort.csv");
    bool funnel_ok = false;
    std::size_t steps = 0;
    if (fs::exists(out / "funnel.json")) {
        try {
            const auto j = nlohmann::json::parse(text::read_file((out / "funnel.json").string()));
            steps = j.at("steps").size();
            funnel_ok = steps == 8;
        } catch (const std::exception&) {
        }
    }
    std::size_t persons = 0;
    if (cohort_ok) persons = cohort_from_csv(text::read_file((out / "cohort.csv").string())).size();
    fs::remove_all(out);
    return {status == 0 && cohort_ok && funnel_ok && secs < 30.0,
            "exit " + std::to_string(status) + ", cohort.csv " + (cohort_ok ? "present" : "missing") + " (" +
                std::to_string(persons) + " persons), funnel.json " + std::to_string(steps) + " steps, " +
                fmt(secs) + " s (limit 30 s)"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"metric-oracle-equivalence", metric_oracle},
        {"funnel-matches-monolithic", funnel_correctness},
        {"self-healing-contract", self_healing},
        {"retrieval-leave-one-out", retrieval_loo},
        {"kb-reproduction", kb_reproduction},
        {"placeholder-round-trip", placeholder_round_trip},
        {"hermetic-end-to-end", hermetic_cli},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::cout << (v.pass ? "PASS  " : "FAIL  ") << name << "  " << v.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failures;
}
