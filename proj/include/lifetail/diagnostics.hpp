#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lifetail/design.hpp"
#include "lifetail/fit.hpp"
#include "lifetail/inference.hpp"

namespace lifetail {

struct QqGrid {
    std::vector<double> probs;
    std::vector<double> theoretical;  // quantiles of the fitted GPD
    std::vector<double> empirical;    // interpolated death-exceedance order statistics
    double pooled_sigma = 0.0;        // scale used for the theoretical column
    std::size_t n_deaths = 0;
    bool low_death_warning = false;  // fewer than 100 observed deaths
};

// Default probability grid 0.001 .. 0.999 in steps of 0.001.
std::vector<double> default_qq_probs();

// Theoretical quantiles come from the fitted GPD with the mean fitted
// scale across all exceedance records (every record counts as one unit
// of exposure); empirical quantiles interpolate the order statistics of
// observed death exceedances. Censored records are excluded from the
// empirical column. When `profile` is given, only records with that
// exact design row enter and the profile's own scale is used.
QqGrid qq_grid(const FitResult& result, std::span<const Exceedance> data,
               std::vector<double> probs = {},
               const std::vector<double>* profile = nullptr);

struct SweepRow {
    double u = 0.0;
    std::size_t n_exceedances = 0;
    bool converged = false;
    double xi_hat = 0.0;
    double xi_lo = 0.0;
    double xi_hi = 0.0;
    std::vector<double> beta_hat;
    std::vector<double> beta_lo;
    std::vector<double> beta_hi;
    std::string error;  // non-empty when the fit failed outright
};

// Full refit per threshold, re-extracting exceedances at each u.
// Per-threshold failures are recorded and the sweep continues.
std::vector<SweepRow> threshold_sweep(const std::vector<IndividualRecord>& records,
                                      const CovariateSchema& schema,
                                      const std::vector<double>& thresholds,
                                      const FitOptions& options = {},
                                      double level = 0.95);

struct ProfileEndpointRow {
    std::map<std::string, std::string> labels;
    std::size_t frequency = 0;
    double x_star = 0.0;
    double se = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Endpoint (with delta CI) per observed covariate profile among the
// exceedances, keeping profiles with frequency strictly greater than
// `min_frequency`, sorted by frequency descending.
std::vector<ProfileEndpointRow> profile_endpoint_table(
    const FitResult& result, const ModelSpec& spec,
    const std::vector<IndividualRecord>& records, std::size_t min_frequency = 10,
    double level = 0.95);

}  // namespace lifetail
