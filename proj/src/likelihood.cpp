#include "lifetail/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lifetail/linalg.hpp"

namespace lifetail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Both stable kernels below switch to a series when |xi*c| is small, so
// the xi -> 0 (Gumbel) limit is the analytic continuation of the main
// branch; no separate limit branch is needed and values are smooth
// through xi = 0.
constexpr double kSeriesCut = 1e-4;

// g(c) = log(1 + xi*c) / xi, the survival exponent.
inline double stable_g(double c, double xi) {
    const double q = xi * c;
    if (std::abs(q) < kSeriesCut)
        return c * (1.0 - q * (1.0 / 2.0 - q * (1.0 / 3.0 - q * (1.0 / 4.0 - q / 5.0))));
    return std::log1p(q) / xi;
}

// h(c) = log(1 + xi*c)/xi^2 - c/(xi*(1 + xi*c)), the xi-score kernel;
// h -> c^2/2 as xi -> 0.
inline double stable_h(double c, double xi) {
    const double q = xi * c;
    if (std::abs(q) < kSeriesCut)
        return c * c *
               (1.0 / 2.0 - q * (2.0 / 3.0 - q * (3.0 / 4.0 - q * (4.0 / 5.0 - q * 5.0 / 6.0))));
    return (std::log1p(q) / xi - c / (1.0 + q)) / xi;
}

}  // namespace

std::vector<double> ParamVector::flat() const {
    std::vector<double> out(beta);
    out.push_back(xi);
    return out;
}

ParamVector ParamVector::from_flat(std::span<const double> theta) {
    if (theta.empty())
        throw std::invalid_argument("ParamVector::from_flat: empty parameter vector");
    ParamVector p;
    p.beta.assign(theta.begin(), theta.end() - 1);
    p.xi = theta.back();
    return p;
}

bool feasible(const ParamVector& theta, std::span<const Exceedance> data) {
    for (const auto& rec : data) {
        const double w = std::exp(-dot(theta.beta, rec.design_row));
        const double cy = rec.y * w;
        if (!std::isfinite(cy) || 1.0 + theta.xi * cy <= 0.0) return false;
    }
    return true;
}

double log_likelihood(const ParamVector& theta, std::span<const Exceedance> data) {
    if (data.empty()) throw std::invalid_argument("log_likelihood: empty dataset");
    CompensatedSum acc;
    const double xi = theta.xi;
    for (const auto& rec : data) {
        const double bz = dot(theta.beta, rec.design_row);
        const double w = std::exp(-bz);
        const double cy = rec.y * w;
        const double ca = rec.a * w;
        if (!std::isfinite(cy) || 1.0 + xi * cy <= 0.0) return -kInf;
        double term = -stable_g(cy, xi) + stable_g(ca, xi);
        if (rec.event) term += -bz - std::log1p(xi * cy);
        acc.add(term);
    }
    return acc.value();
}

std::vector<double> gradient(const ParamVector& theta, std::span<const Exceedance> data) {
    if (data.empty()) throw std::invalid_argument("gradient: empty dataset");
    const std::size_t p = theta.beta.size();
    std::vector<CompensatedSum> acc(p + 1);
    const double xi = theta.xi;
    for (const auto& rec : data) {
        const double bz = dot(theta.beta, rec.design_row);
        const double w = std::exp(-bz);
        const double cy = rec.y * w;
        const double ca = rec.a * w;
        if (!std::isfinite(cy) || 1.0 + xi * cy <= 0.0)
            throw std::domain_error("gradient: parameters infeasible for the data");
        const double ty = cy / (1.0 + xi * cy);
        const double ta = ca / (1.0 + xi * ca);
        const double delta = rec.event ? 1.0 : 0.0;
        // d l_i / d(beta . z) = -delta + (1 + delta*xi)*ty - ta
        const double bcoef = -delta + (1.0 + delta * xi) * ty - ta;
        for (std::size_t j = 0; j < p; ++j) acc[j].add(bcoef * rec.design_row[j]);
        acc[p].add(stable_h(cy, xi) - stable_h(ca, xi) - delta * ty);
    }
    std::vector<double> out(p + 1);
    for (std::size_t j = 0; j <= p; ++j) out[j] = acc[j].value();
    return out;
}

}  // namespace lifetail
