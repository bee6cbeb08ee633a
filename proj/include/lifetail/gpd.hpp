#pragma once

#include <random>

namespace lifetail::gpd {

// Shape values inside this band use the exponential-limit branch,
// evaluated with series/log1p-style primitives so both branches agree to
// well below test tolerances at the seam.
inline constexpr double xi_zero_tol = 1e-8;

struct Params {
    double sigma;  // scale, years, > 0
    double xi;     // shape (extreme value index)

    Params(double sigma_, double xi_);

    bool has_finite_endpoint() const { return xi < 0.0; }
    // Upper endpoint of the exceedance support, -sigma/xi; only defined
    // for xi < 0.
    double upper_endpoint() const;
};

// Survival function S(y) = (1 + xi*y/sigma)^(-1/xi), exponential limit
// exp(-y/sigma). Exceedances at or beyond a finite endpoint have
// survival exactly 0 (closed-support convention).
double survival(double y, const Params& p);
double log_survival(double y, const Params& p);  // -inf outside support

double density(double y, const Params& p);
double log_density(double y, const Params& p);  // -inf outside support

double cdf(double y, const Params& p);

// Inverse CDF; prob must lie strictly inside (0, 1).
double quantile(double prob, const Params& p);

// Draw from the exceedance distribution conditional on exceeding `entry`
// (inverse transform on the survival ratio S(y)/S(entry); entry = 0
// gives an unconditional draw). Deterministic given the stream state.
double sample_truncated(double entry, const Params& p, std::mt19937_64& rng);

}  // namespace lifetail::gpd
