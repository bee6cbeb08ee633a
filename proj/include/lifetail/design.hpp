#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace lifetail {

// One person's observation window: entry age, exit age (death or
// censoring), event indicator, and categorical covariates recorded at
// the threshold age. Extra descriptive columns (e.g. "period") are kept
// in the covariate map but only schema covariates are validated.
struct IndividualRecord {
    double entry_age = 0.0;
    double exit_age = 0.0;
    bool event = false;  // true = death observed
    std::map<std::string, std::string> covariates;
};

struct Covariate {
    std::string name;
    std::vector<std::string> categories;
    std::string reference;  // empty until resolved
};

// Ordered covariate schema with reference levels. Design rows are an
// intercept followed by one dummy per non-reference category, covariates
// in schema order, categories in listed order.
struct CovariateSchema {
    std::vector<Covariate> covariates;

    bool resolved() const;
    void validate() const;  // throws on malformed schema
    std::size_t design_dim() const;
    std::vector<std::string> column_names() const;
    const Covariate* find(const std::string& name) const;
};

// Threshold-relative view of a record.
struct Exceedance {
    double y = 0.0;   // exit_age - u, > 0
    double a = 0.0;   // max(entry_age - u, 0), < y
    bool event = false;
    std::vector<double> design_row;
};

struct ModelSpec {
    double threshold_u = 0.0;
    CovariateSchema schema;
};

struct ExtractResult {
    std::vector<Exceedance> data;
    std::size_t kept = 0;
    std::size_t dropped_below_threshold = 0;  // exit_age <= u
    std::size_t dropped_degenerate = 0;       // exit at/below entry exceedance
};

// Schema file: one covariate per line, `name = cat1,cat2*,cat3`, where
// `*` marks the reference level. Lines starting with '#' are comments.
CovariateSchema parse_schema(std::istream& in);
CovariateSchema parse_schema_file(const std::string& path);

// Fills unresolved reference levels with the highest-frequency category
// in `records` (ties broken by listed order).
void resolve_references(CovariateSchema& schema,
                        const std::vector<IndividualRecord>& records);

// CSV layout: header `entry_age,exit_age,event,<covariate names...>`;
// ages in decimal years, event in {0,1}. Schema covariates must all be
// present; labels are validated against the schema.
std::vector<IndividualRecord> load_records(std::istream& in,
                                           const CovariateSchema& schema);
std::vector<IndividualRecord> load_records_file(const std::string& path,
                                                const CovariateSchema& schema);

void write_records(std::ostream& out, const std::vector<IndividualRecord>& records,
                   const CovariateSchema& schema);

std::vector<double> encode_profile(const std::map<std::string, std::string>& labels,
                                   const CovariateSchema& schema);
std::map<std::string, std::string> decode_profile(const std::vector<double>& row,
                                                  const CovariateSchema& schema);

ExtractResult to_exceedances(const std::vector<IndividualRecord>& records,
                             const ModelSpec& spec);

// Counts of records cross-classified by age band at last observation and
// calendar period. Bands follow the lower-open/upper-closed convention
// (a, b], with under/overflow bands so margins always sum to the record
// count. The period is read from a covariate named "period" when
// present; otherwise a single "all" column is used.
struct ContingencyTable {
    std::vector<std::string> age_bands;     // row labels
    std::vector<std::string> period_bands;  // column labels
    std::vector<std::vector<std::size_t>> counts;  // [age][period]
    std::vector<std::size_t> age_totals;
    std::vector<std::size_t> period_totals;
    std::size_t total = 0;
};

ContingencyTable contingency_summary(const std::vector<IndividualRecord>& records,
                                     const std::vector<double>& age_breaks,
                                     const std::vector<int>& period_breaks);

}  // namespace lifetail
