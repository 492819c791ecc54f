#pragma once

#include "epicohort/backend.hpp"
#include "epicohort/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace epicohort {

// Mean number of events per person, per table.
struct EventDensities {
    double visits = 6.0;
    double conditions = 4.0;
    double drugs = 4.0;
    double procedures = 1.0;
    double measurements = 3.0;
};

struct SyntheticDbSpec {
    std::uint64_t seed = 42;
    int n_persons = 1000;
    Date start{std::chrono::year{2015}, std::chrono::month{1}, std::chrono::day{1}};
    Date end{std::chrono::year{2022}, std::chrono::month{12}, std::chrono::day{31}};
    EventDensities densities;
    int n_providers = 25;
};

// Throws ValidationError.
void validate_spec(const SyntheticDbSpec& spec);

struct CatalogConcept {
    std::int64_t concept_id;
    const char* name;
    const char* domain_id;
    const char* vocabulary_id;
    const char* concept_class_id;
    const char* concept_code;
};

// Concepts the generator draws events from; also written to CONCEPT.
const std::vector<CatalogConcept>& synthetic_concept_catalog();

// PERSON, OBSERVATION_PERIOD, VISIT_OCCURRENCE, CONDITION_OCCURRENCE,
// DRUG_EXPOSURE, DRUG_ERA, PROCEDURE_OCCURRENCE, MEASUREMENT, PROVIDER,
// CONCEPT (lowercase table names).
const std::vector<std::string>& omop_tables();

std::string omop_schema_sql();

// Full DDL + data script. Byte-identical for identical specs.
std::string synthetic_omop_sql(const SyntheticDbSpec& spec);

void generate_synthetic_omop(const SyntheticDbSpec& spec, SqlBackend& backend);

// Deterministic text dump of every table, rows ordered by primary key.
std::string dump_tables(SqlBackend& backend);

}  // namespace epicohort
