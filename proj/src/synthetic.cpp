#include "epicohort/synthetic.hpp"

#include "epicohort/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <map>
#include <random>

namespace epicohort {

namespace {

using namespace std::chrono;

const std::vector<CatalogConcept> kCatalog = {
    {201826, "Type 2 diabetes mellitus", "Condition", "SNOMED", "Clinical Finding", "44054006"},
    {201820, "Diabetes mellitus", "Condition", "SNOMED", "Clinical Finding", "73211009"},
    {316866, "Hypertensive disorder", "Condition", "SNOMED", "Clinical Finding", "38341003"},
    {4329847, "Myocardial infarction", "Condition", "SNOMED", "Clinical Finding", "22298006"},
    {313217, "Atrial fibrillation", "Condition", "SNOMED", "Clinical Finding", "49436004"},
    {316139, "Heart failure", "Condition", "SNOMED", "Clinical Finding", "84114007"},
    {255573, "Chronic obstructive lung disease", "Condition", "SNOMED", "Clinical Finding", "13645005"},
    {317009, "Asthma", "Condition", "SNOMED", "Clinical Finding", "195967001"},
    {433736, "Obesity", "Condition", "SNOMED", "Clinical Finding", "414916001"},
    {46271022, "Chronic kidney disease", "Condition", "SNOMED", "Clinical Finding", "709044004"},
    {440383, "Depressive disorder", "Condition", "SNOMED", "Clinical Finding", "35489007"},
    {433527, "Endometriosis", "Condition", "SNOMED", "Clinical Finding", "129103003"},
    {443392, "Malignant neoplastic disease", "Condition", "SNOMED", "Clinical Finding", "363346000"},
    {381316, "Cerebrovascular accident", "Condition", "SNOMED", "Clinical Finding", "230690007"},
    {80180, "Osteoarthritis", "Condition", "SNOMED", "Clinical Finding", "396275006"},
    {432867, "Hyperlipidemia", "Condition", "SNOMED", "Clinical Finding", "55822004"},
    {1503297, "metformin", "Drug", "RxNorm", "Ingredient", "6809"},
    {1545958, "atorvastatin", "Drug", "RxNorm", "Ingredient", "83367"},
    {1539403, "simvastatin", "Drug", "RxNorm", "Ingredient", "36567"},
    {1308216, "lisinopril", "Drug", "RxNorm", "Ingredient", "29046"},
    {1332418, "amlodipine", "Drug", "RxNorm", "Ingredient", "17767"},
    {974166, "hydrochlorothiazide", "Drug", "RxNorm", "Ingredient", "5487"},
    {1310149, "warfarin", "Drug", "RxNorm", "Ingredient", "11289"},
    {40228152, "dabigatran", "Drug", "RxNorm", "Ingredient", "1037042"},
    {40241331, "rivaroxaban", "Drug", "RxNorm", "Ingredient", "1114195"},
    {43013024, "apixaban", "Drug", "RxNorm", "Ingredient", "1364430"},
    {1112807, "aspirin", "Drug", "RxNorm", "Ingredient", "1191"},
    {1177480, "ibuprofen", "Drug", "RxNorm", "Ingredient", "5640"},
    {1115008, "naproxen", "Drug", "RxNorm", "Ingredient", "7258"},
    {1125315, "acetaminophen", "Drug", "RxNorm", "Ingredient", "161"},
    {1580747, "sitagliptin", "Drug", "RxNorm", "Ingredient", "593411"},
    {739138, "sertraline", "Drug", "RxNorm", "Ingredient", "36437"},
    {4336464, "Coronary artery bypass graft", "Procedure", "SNOMED", "Procedure", "232717009"},
    {4249893, "Colonoscopy", "Procedure", "SNOMED", "Procedure", "73761001"},
    {4127886, "Hysterectomy", "Procedure", "SNOMED", "Procedure", "236886002"},
    {4283892, "Percutaneous coronary intervention", "Procedure", "SNOMED", "Procedure", "415070008"},
    {4230911, "Laparoscopy", "Procedure", "SNOMED", "Procedure", "73632009"},
    {3004410, "Hemoglobin A1c/Hemoglobin.total in Blood", "Measurement", "LOINC", "Lab Test", "4548-4"},
    {3004249, "Systolic blood pressure", "Measurement", "LOINC", "Clinical Observation", "8480-6"},
    {3012888, "Diastolic blood pressure", "Measurement", "LOINC", "Clinical Observation", "8462-4"},
    {3038553, "Body mass index (BMI) [Ratio]", "Measurement", "LOINC", "Clinical Observation", "39156-5"},
    {3016723, "Creatinine [Mass/volume] in Serum or Plasma", "Measurement", "LOINC", "Lab Test", "2160-0"},
    {9201, "Inpatient Visit", "Visit", "Visit", "Visit", "IP"},
    {9202, "Outpatient Visit", "Visit", "Visit", "Visit", "OP"},
    {9203, "Emergency Room Visit", "Visit", "Visit", "Visit", "ER"},
    {8507, "MALE", "Gender", "Gender", "Gender", "M"},
    {8532, "FEMALE", "Gender", "Gender", "Gender", "F"},
    {38004446, "General Practice", "Provider", "Medicare Specialty", "Physician Specialty", "01"},
    {38004451, "Cardiology", "Provider", "Medicare Specialty", "Physician Specialty", "06"},
    {38004456, "Internal Medicine", "Provider", "Medicare Specialty", "Physician Specialty", "11"},
    {38004461, "Obstetrics/Gynecology", "Provider", "Medicare Specialty", "Physician Specialty", "16"},
    {32817, "EHR", "Type Concept", "Type Concept", "Type Concept", "OMOP4976890"},
};

const std::vector<std::string> kTables = {"person",
                                          "observation_period",
                                          "provider",
                                          "visit_occurrence",
                                          "condition_occurrence",
                                          "drug_exposure",
                                          "drug_era",
                                          "procedure_occurrence",
                                          "measurement",
                                          "concept"};

constexpr std::int64_t kEhrType = 32817;

const char* kSchema = R"(CREATE TABLE concept (
  concept_id INTEGER PRIMARY KEY,
  concept_name TEXT NOT NULL,
  domain_id TEXT NOT NULL,
  vocabulary_id TEXT NOT NULL,
  concept_class_id TEXT NOT NULL,
  standard_concept TEXT,
  concept_code TEXT NOT NULL
);
CREATE TABLE person (
  person_id INTEGER PRIMARY KEY,
  gender_concept_id INTEGER NOT NULL REFERENCES concept(concept_id),
  year_of_birth INTEGER NOT NULL,
  month_of_birth INTEGER,
  day_of_birth INTEGER,
  birth_datetime TEXT,
  race_concept_id INTEGER,
  ethnicity_concept_id INTEGER
);
CREATE TABLE observation_period (
  observation_period_id INTEGER PRIMARY KEY,
  person_id INTEGER NOT NULL REFERENCES person(person_id),
  observation_period_start_date TEXT NOT NULL,
  observation_period_end_date TEXT NOT NULL,
  period_type_concept_id INTEGER
);
CREATE TABLE provider (
  provider_id INTEGER PRIMARY KEY,
  provider_name TEXT,
  specialty_concept_id INTEGER REFERENCES concept(concept_id)
);
CREATE TABLE visit_occurrence (
  visit_occurrence_id INTEGER PRIMARY KEY,
  person_id INTEGER NOT NULL REFERENCES person(person_id),
  visit_concept_id INTEGER NOT NULL REFERENCES concept(concept_id),
  visit_start_date TEXT NOT NULL,
  visit_end_date TEXT NOT NULL,
  visit_type_concept_id INTEGER,
  provider_id INTEGER REFERENCES provider(provider_id)
);
CREATE TABLE condition_occurrence (
  condition_occurrence_id INTEGER PRIMARY KEY,
  person_id INTEGER NOT NULL REFERENCES person(person_id),
  condition_concept_id INTEGER NOT NULL REFERENCES concept(concept_id),
  condition_start_date TEXT NOT NULL,
  condition_end_date TEXT,
  condition_type_concept_id INTEGER,
  visit_occurrence_id INTEGER REFERENCES visit_occurrence(visit_occurrence_id)
);
CREATE TABLE drug_exposure (
  drug_exposure_id INTEGER PRIMARY KEY,
  person_id INTEGER NOT NULL REFERENCES person(person_id),
  drug_concept_id INTEGER NOT NULL REFERENCES concept(concept_id),
  drug_exposure_start_date TEXT NOT NULL,
  drug_exposure_end_date TEXT NOT NULL,
  days_supply INTEGER,
  quantity REAL,
  drug_type_concept_id INTEGER,
  visit_occurrence_id INTEGER REFERENCES visit_occurrence(visit_occurrence_id)
);
CREATE TABLE drug_era (
  drug_era_id INTEGER PRIMARY KEY,
  person_id INTEGER NOT NULL REFERENCES person(person_id),
  drug_concept_id INTEGER NOT NULL REFERENCES concept(concept_id),
  drug_era_start_date TEXT NOT NULL,
  drug_era_end_date TEXT NOT NULL,
  drug_exposure_count INTEGER,
  gap_days INTEGER
);
CREATE TABLE procedure_occurrence (
  procedure_occurrence_id INTEGER PRIMARY KEY,
  person_id INTEGER NOT NULL REFERENCES person(person_id),
  procedure_concept_id INTEGER NOT NULL REFERENCES concept(concept_id),
  procedure_date TEXT NOT NULL,
  procedure_type_concept_id INTEGER,
  visit_occurrence_id INTEGER REFERENCES visit_occurrence(visit_occurrence_id),
  provider_id INTEGER REFERENCES provider(provider_id)
);
CREATE TABLE measurement (
  measurement_id INTEGER PRIMARY KEY,
  person_id INTEGER NOT NULL REFERENCES person(person_id),
  measurement_concept_id INTEGER NOT NULL REFERENCES concept(concept_id),
  measurement_date TEXT NOT NULL,
  value_as_number REAL,
  unit_concept_id INTEGER,
  measurement_type_concept_id INTEGER,
  visit_occurrence_id INTEGER REFERENCES visit_occurrence(visit_occurrence_id)
);
CREATE INDEX idx_condition_person ON condition_occurrence(person_id);
CREATE INDEX idx_drug_person ON drug_exposure(person_id);
CREATE INDEX idx_drug_era_person ON drug_era(person_id);
CREATE INDEX idx_procedure_person ON procedure_occurrence(person_id);
CREATE INDEX idx_measurement_person ON measurement(person_id);
CREATE INDEX idx_visit_person ON visit_occurrence(person_id);
)";

// Hand-rolled draws so output does not depend on the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Inclusive [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(gen_() % span);
    }

    int poisson(double mean) {
        if (mean <= 0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = uniform();
        while (p > limit) {
            ++k;
            p *= uniform();
        }
        return k;
    }

    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(between(0, static_cast<std::int64_t>(v.size()) - 1))];
    }

private:
    std::mt19937_64 gen_;
};

std::string quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

std::string iso(sys_days d) { return quote(format_iso_date(year_month_day{d})); }

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

// Buffers rows and flushes them as multi-row INSERTs.
class InsertWriter {
public:
    InsertWriter(std::string& out, std::string table, std::string columns)
        : out_(out), table_(std::move(table)), columns_(std::move(columns)) {}
    ~InsertWriter() { flush(); }

    void row(const std::string& values) {
        pending_.push_back(values);
        if (pending_.size() >= 500) flush();
    }

    void flush() {
        if (pending_.empty()) return;
        out_ += "INSERT INTO " + table_ + " (" + columns_ + ") VALUES\n";
        for (std::size_t i = 0; i < pending_.size(); ++i) {
            out_ += "(" + pending_[i] + ")";
            out_ += i + 1 == pending_.size() ? ";\n" : ",\n";
        }
        pending_.clear();
    }

private:
    std::string& out_;
    std::string table_;
    std::string columns_;
    std::vector<std::string> pending_;
};

std::vector<std::int64_t> ids_in(std::string_view domain) {
    std::vector<std::int64_t> out;
    for (const auto& c : kCatalog) {
        if (domain == c.domain_id) out.push_back(c.concept_id);
    }
    return out;
}

struct Visit {
    std::int64_t id;
    sys_days start;
    sys_days end;
    std::int64_t provider;
};

struct Exposure {
    sys_days start;
    sys_days end;
};

}  // namespace

const std::vector<CatalogConcept>& synthetic_concept_catalog() { return kCatalog; }

const std::vector<std::string>& omop_tables() { return kTables; }

std::string omop_schema_sql() { return kSchema; }

void validate_spec(const SyntheticDbSpec& spec) {
    if (spec.n_persons < 1) throw ValidationError("n_persons must be at least 1");
    if (spec.n_providers < 1) throw ValidationError("n_providers must be at least 1");
    if (!spec.start.ok() || !spec.end.ok()) throw ValidationError("invalid date range");
    if (sys_days{spec.end} < sys_days{spec.start}) throw ValidationError("date range start must not be after end");
    const auto& d = spec.densities;
    for (double v : {d.visits, d.conditions, d.drugs, d.procedures, d.measurements}) {
        if (!(v >= 0.0) || v > 500.0) throw ValidationError("event densities must be in [0, 500]");
    }
}

std::string synthetic_omop_sql(const SyntheticDbSpec& spec) {
    validate_spec(spec);
    Rng rng(spec.seed);
    const sys_days lo{spec.start};
    const sys_days hi{spec.end};
    const auto day_in = [&](sys_days a, sys_days b) { return a + days{rng.between(0, (b - a).count())}; };

    const auto conditions = ids_in("Condition");
    const auto drugs = ids_in("Drug");
    const auto procedures = ids_in("Procedure");
    const auto measurements = ids_in("Measurement");
    const auto visit_kinds = ids_in("Visit");
    const auto specialties = ids_in("Provider");

    std::string sql = "BEGIN;\n";
    sql += kSchema;
    {
        InsertWriter w(sql, "concept",
                       "concept_id, concept_name, domain_id, vocabulary_id, concept_class_id, standard_concept, "
                       "concept_code");
        for (const auto& c : kCatalog) {
            w.row(std::to_string(c.concept_id) + ", " + quote(c.name) + ", " + quote(c.domain_id) + ", " +
                  quote(c.vocabulary_id) + ", " + quote(c.concept_class_id) + ", 'S', " + quote(c.concept_code));
        }
    }
    {
        InsertWriter w(sql, "provider", "provider_id, provider_name, specialty_concept_id");
        for (int p = 1; p <= spec.n_providers; ++p) {
            w.row(std::to_string(p) + ", 'Provider " + std::to_string(p) + "', " +
                  std::to_string(rng.pick(specialties)));
        }
    }

    InsertWriter person(sql, "person",
                        "person_id, gender_concept_id, year_of_birth, month_of_birth, day_of_birth, birth_datetime, "
                        "race_concept_id, ethnicity_concept_id");
    InsertWriter obs(sql, "observation_period",
                     "observation_period_id, person_id, observation_period_start_date, observation_period_end_date, "
                     "period_type_concept_id");
    InsertWriter visit(sql, "visit_occurrence",
                       "visit_occurrence_id, person_id, visit_concept_id, visit_start_date, visit_end_date, "
                       "visit_type_concept_id, provider_id");
    InsertWriter cond(sql, "condition_occurrence",
                      "condition_occurrence_id, person_id, condition_concept_id, condition_start_date, "
                      "condition_end_date, condition_type_concept_id, visit_occurrence_id");
    InsertWriter drug(sql, "drug_exposure",
                      "drug_exposure_id, person_id, drug_concept_id, drug_exposure_start_date, "
                      "drug_exposure_end_date, days_supply, quantity, drug_type_concept_id, visit_occurrence_id");
    InsertWriter era(sql, "drug_era",
                     "drug_era_id, person_id, drug_concept_id, drug_era_start_date, drug_era_end_date, "
                     "drug_exposure_count, gap_days");
    InsertWriter proc(sql, "procedure_occurrence",
                      "procedure_occurrence_id, person_id, procedure_concept_id, procedure_date, "
                      "procedure_type_concept_id, visit_occurrence_id, provider_id");
    InsertWriter meas(sql, "measurement",
                      "measurement_id, person_id, measurement_concept_id, measurement_date, value_as_number, "
                      "unit_concept_id, measurement_type_concept_id, visit_occurrence_id");

    std::int64_t visit_id = 0, cond_id = 0, drug_id = 0, era_id = 0, proc_id = 0, meas_id = 0;
    const int first_birth = static_cast<int>(spec.start.year()) - 85;
    const int last_birth = std::max(first_birth, static_cast<int>(spec.end.year()) - 18);
    const std::string ehr = std::to_string(kEhrType);

    for (std::int64_t pid = 1; pid <= spec.n_persons; ++pid) {
        const auto p = std::to_string(pid);
        const bool female = rng.uniform() < 0.5;
        const auto yob = rng.between(first_birth, last_birth);
        const auto mob = rng.between(1, 12);
        const auto dob = rng.between(1, 28);
        char birth[32];
        std::snprintf(birth, sizeof birth, "%04lld-%02lld-%02lld", static_cast<long long>(yob),
                      static_cast<long long>(mob), static_cast<long long>(dob));
        person.row(p + ", " + (female ? "8532" : "8507") + ", " + std::to_string(yob) + ", " + std::to_string(mob) +
                   ", " + std::to_string(dob) + ", " + quote(birth) + ", 0, 0");

        const sys_days op_start = day_in(lo, hi);
        const sys_days op_end = day_in(op_start, hi);
        obs.row(p + ", " + p + ", " + iso(op_start) + ", " + iso(op_end) + ", " + ehr);

        std::vector<Visit> visits;
        const int n_visits = rng.poisson(spec.densities.visits);
        for (int i = 0; i < n_visits; ++i) {
            const auto kind = rng.pick(visit_kinds);
            const sys_days s = day_in(op_start, op_end);
            const sys_days e = kind == 9201 ? std::min(op_end, s + days{rng.between(1, 10)}) : s;
            Visit v{++visit_id, s, e, rng.between(1, spec.n_providers)};
            visits.push_back(v);
            visit.row(std::to_string(v.id) + ", " + p + ", " + std::to_string(kind) + ", " + iso(s) + ", " + iso(e) +
                      ", " + ehr + ", " + std::to_string(v.provider));
        }
        // events attach to a random visit when the person has any
        const auto anchor = [&]() -> std::pair<sys_days, std::string> {
            if (visits.empty()) return {day_in(op_start, op_end), "NULL"};
            const auto& v = rng.pick(visits);
            return {v.start, std::to_string(v.id)};
        };

        const int n_cond = rng.poisson(spec.densities.conditions);
        for (int i = 0; i < n_cond; ++i) {
            const auto concept_id = rng.pick(conditions);
            const auto [d, vid] = anchor();
            const bool resolved = rng.uniform() < 0.3;
            cond.row(std::to_string(++cond_id) + ", " + p + ", " + std::to_string(concept_id) + ", " + iso(d) + ", " +
                     (resolved ? iso(std::min(op_end, d + days{rng.between(7, 180)})) : std::string("NULL")) + ", " +
                     ehr + ", " + vid);
        }

        std::map<std::int64_t, std::vector<Exposure>> by_drug;
        const int n_drug = rng.poisson(spec.densities.drugs);
        for (int i = 0; i < n_drug; ++i) {
            const auto concept_id = rng.pick(drugs);
            const sys_days s = day_in(op_start, op_end);
            const std::int64_t supply = std::array<std::int64_t, 3>{30, 60, 90}[rng.between(0, 2)];
            const sys_days e = s + days{supply - 1};
            by_drug[concept_id].push_back({s, e});
            drug.row(std::to_string(++drug_id) + ", " + p + ", " + std::to_string(concept_id) + ", " + iso(s) + ", " +
                     iso(e) + ", " + std::to_string(supply) + ", " + std::to_string(supply) + ".0, " + ehr + ", NULL");
        }
        // eras merge exposures of the same ingredient separated by <= 30 days
        for (auto& [concept_id, exps] : by_drug) {
            std::sort(exps.begin(), exps.end(), [](const Exposure& a, const Exposure& b) {
                return a.start != b.start ? a.start < b.start : a.end < b.end;
            });
            std::size_t i = 0;
            while (i < exps.size()) {
                sys_days s = exps[i].start, e = exps[i].end;
                long gap = 0;
                std::size_t j = i + 1;
                for (; j < exps.size() && exps[j].start <= e + days{30}; ++j) {
                    if (exps[j].start > e) gap += (exps[j].start - e).count() - 1;
                    e = std::max(e, exps[j].end);
                }
                era.row(std::to_string(++era_id) + ", " + p + ", " + std::to_string(concept_id) + ", " + iso(s) +
                        ", " + iso(e) + ", " + std::to_string(j - i) + ", " + std::to_string(gap));
                i = j;
            }
        }

        const int n_proc = rng.poisson(spec.densities.procedures);
        for (int i = 0; i < n_proc; ++i) {
            const auto concept_id = rng.pick(procedures);
            const auto [d, vid] = anchor();
            proc.row(std::to_string(++proc_id) + ", " + p + ", " + std::to_string(concept_id) + ", " + iso(d) + ", " +
                     ehr + ", " + vid + ", " + std::to_string(rng.between(1, spec.n_providers)));
        }

        const int n_meas = rng.poisson(spec.densities.measurements);
        for (int i = 0; i < n_meas; ++i) {
            const auto concept_id = rng.pick(measurements);
            const auto [d, vid] = anchor();
            double value = 0;
            switch (concept_id) {
                case 3004410: value = 4.5 + rng.uniform() * 7.0; break;
                case 3004249: value = 95 + rng.uniform() * 90; break;
                case 3012888: value = 55 + rng.uniform() * 50; break;
                case 3038553: value = 17 + rng.uniform() * 28; break;
                default: value = 0.5 + rng.uniform() * 3.0; break;
            }
            meas.row(std::to_string(++meas_id) + ", " + p + ", " + std::to_string(concept_id) + ", " + iso(d) + ", " +
                     fmt_num(value) + ", 0, " + ehr + ", " + vid);
        }
    }
    person.flush();
    obs.flush();
    visit.flush();
    cond.flush();
    drug.flush();
    era.flush();
    proc.flush();
    meas.flush();
    sql += "COMMIT;\n";
    return sql;
}

void generate_synthetic_omop(const SyntheticDbSpec& spec, SqlBackend& backend) {
    backend.execute_script(synthetic_omop_sql(spec));
}

std::string dump_tables(SqlBackend& backend) {
    std::string out;
    for (const auto& t : kTables) {
        auto rows = backend.execute("SELECT * FROM " + t + " ORDER BY 1");
        out += "== " + t + "\n";
        for (const auto& r : rows.rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += '|';
                out += value_to_string(r[i]);
            }
            out += '\n';
        }
    }
    return out;
}

}  // namespace epicohort
