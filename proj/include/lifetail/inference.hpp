#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lifetail/design.hpp"
#include "lifetail/fit.hpp"
#include "lifetail/likelihood.hpp"

namespace lifetail {

// Profile-specific maximum lifespan x* = u + exp(beta . z) / (-xi).
// Only defined for xi < 0; throws std::domain_error otherwise ("no
// finite endpoint").
double endpoint(const ParamVector& theta, std::span<const double> profile, double u);

// Gradient of the endpoint with respect to (beta, xi).
std::vector<double> endpoint_gradient(const ParamVector& theta,
                                      std::span<const double> profile);

struct EndpointEstimate {
    std::vector<double> profile;
    double x_star = 0.0;
    double se = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::string method;  // "fisher-delta" or "bootstrap-percentile"
};

// Delta-method interval for the endpoint. Throws on xi >= 0 and on a
// negative propagated variance (never clamps).
EndpointEstimate endpoint_delta_ci(const FitResult& result,
                                   std::span<const double> profile, double u,
                                   double level);

struct ContrastRow {
    std::string covariate;
    std::string level;
    double delta = 0.0;  // endpoint(swapped) - endpoint(base)
    double se = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Change in maximum lifespan when one characteristic of `base` is
// swapped to each alternative level, all else fixed. Includes swaps to
// the reference level whenever the base sits elsewhere.
std::vector<ContrastRow> contrast_table(const FitResult& result,
                                        const CovariateSchema& schema,
                                        const std::map<std::string, std::string>& base,
                                        double u, double level = 0.95);

struct BootstrapOptions {
    FitOptions fit;
    int threads = 1;
    // Test hook: replaces the uniform-with-replacement index draw.
    std::function<std::vector<std::size_t>(std::uint64_t replicate, std::size_t n,
                                           std::mt19937_64& rng)>
        resampler;
};

struct BootstrapRun {
    int replicates = 0;
    std::uint64_t seed = 0;
    std::vector<ParamVector> estimates;  // converged replicates, in index order
    int failures = 0;
    bool flagged = false;  // failures exceeded 10% of B
};

// Non-parametric bootstrap: each replicate resamples n exceedance
// records with replacement using a replicate-indexed substream of
// `seed`, refits starting from the original estimate, and stores the
// replicate parameters. Deterministic for fixed (seed, B, data order),
// independent of thread count.
BootstrapRun bootstrap(std::span<const Exceedance> data, const FitResult& original,
                       int replicates, std::uint64_t seed,
                       const BootstrapOptions& options = {});

// Percentile interval from the empirical quantiles of `functional`
// across stored replicates; requires at least 100 of them.
std::pair<double, double> bootstrap_percentile_ci(
    const BootstrapRun& run, const std::function<double(const ParamVector&)>& functional,
    double level);

}  // namespace lifetail
