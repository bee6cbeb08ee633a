#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lifetail/design.hpp"
#include "lifetail/likelihood.hpp"
#include "lifetail/simulate.hpp"

namespace testutil {

// The five-covariate demographic schema used throughout the tests,
// references marked with the usual convention.
inline lifetail::CovariateSchema demographic_schema() {
    lifetail::CovariateSchema schema;
    schema.covariates = {
        {"civ", {"widowed", "unmarried", "married", "divorced"}, "widowed"},
        {"edu", {"primary", "secondary", "tertiary", "unobserved"}, "primary"},
        {"hht", {"collective", "single", "couple", "family", "other"}, "collective"},
        {"org", {"native", "west-europe", "other"}, "native"},
        {"sex", {"female", "male"}, "female"},
    };
    return schema;
}

using Labels = std::map<std::string, std::string>;

inline Labels all_reference_profile() {
    return {{"civ", "widowed"},
            {"edu", "primary"},
            {"hht", "collective"},
            {"org", "native"},
            {"sex", "female"}};
}

// Reference coefficient sets for the demographic schema (externally
// estimated values used as golden inputs in formula-level tests).
// Order: intercept, civ(unmarried, married, divorced), edu(secondary,
// tertiary, unobserved), hht(single, couple, family, other),
// org(west-europe, other), sex(male).
inline lifetail::ParamVector belgium_reference_params() {
    lifetail::ParamVector theta;
    theta.beta = {0.742, 0.108, 0.098, 0.067, 0.021, 0.068, -0.007,
                  0.279, 0.135, 0.181, 0.136, 0.164, 0.905, -0.202};
    theta.xi = -0.1340;
    return theta;
}

inline lifetail::ParamVector netherlands_reference_params() {
    lifetail::ParamVector theta;
    theta.beta = {0.653, 0.049, 0.114, -0.042, -0.004, -0.013, -0.001,
                  0.243, 0.071, 0.154, 0.381, 0.020, 0.133, -0.155};
    theta.xi = -0.1140;
    return theta;
}

// Small two-covariate schema for simulation-heavy tests.
inline lifetail::CovariateSchema small_schema() {
    lifetail::CovariateSchema schema;
    schema.covariates = {
        {"sex", {"female", "male"}, "female"},
        {"hht", {"collective", "single"}, "collective"},
    };
    return schema;
}

// Scenario in the empirically relevant regime: intercept ~0.74,
// xi ~ -0.13, four profile cells, ~20% censoring under uniform(0,3)
// delayed entry (censor age tuned for that rate).
inline lifetail::ScenarioConfig small_scenario(std::size_t n, std::uint64_t seed) {
    lifetail::ScenarioConfig cfg;
    cfg.schema = small_schema();
    cfg.true_beta = {0.74, -0.20, 0.28};
    cfg.true_xi = -0.13;
    cfg.threshold_u = 100.0;
    cfg.n_individuals = n;
    cfg.profiles = {
        {{{"sex", "female"}, {"hht", "collective"}}, 0.4},
        {{{"sex", "female"}, {"hht", "single"}}, 0.3},
        {{{"sex", "male"}, {"hht", "collective"}}, 0.2},
        {{{"sex", "male"}, {"hht", "single"}}, 0.1},
    };
    cfg.entry = lifetail::EntryDist::Uniform;
    cfg.entry_max = 3.0;
    cfg.censor_age = 104.4;
    cfg.seed = seed;
    return cfg;
}

// Central finite differences of a scalar function.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double rel_step = 1e-6) {
    std::vector<double> g(x.size());
    std::vector<double> xp = x, xm = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double h = rel_step * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        g[j] = (f(xp) - f(xm)) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return g;
}

// Composite Simpson quadrature with `intervals` subdivisions (made even).
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      std::size_t intervals) {
    if (intervals % 2 == 1) ++intervals;
    const double h = (hi - lo) / static_cast<double>(intervals);
    double sum = f(lo) + f(hi);
    for (std::size_t i = 1; i < intervals; ++i)
        sum += f(lo + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

}  // namespace testutil
