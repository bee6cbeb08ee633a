#include "lifetail/gpd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lifetail/rng.hpp"

namespace lifetail::gpd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Params::Params(double sigma_, double xi_) : sigma(sigma_), xi(xi_) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("gpd::Params: sigma must be finite and > 0");
    if (!std::isfinite(xi))
        throw std::invalid_argument("gpd::Params: xi must be finite");
}

double Params::upper_endpoint() const {
    if (!(xi < 0.0))
        throw std::domain_error("gpd::Params: no finite endpoint for xi >= 0");
    return -sigma / xi;
}

double log_survival(double y, const Params& p) {
    if (y <= 0.0) return 0.0;
    if (p.xi < 0.0 && y >= -p.sigma / p.xi) return -kInf;  // closed support
    const double r = y / p.sigma;
    if (std::abs(p.xi) < xi_zero_tol) return -r;
    const double arg = 1.0 + p.xi * r;
    if (arg <= 0.0) return -kInf;
    return -std::log1p(p.xi * r) / p.xi;
}

double survival(double y, const Params& p) {
    return std::exp(log_survival(y, p));
}

double cdf(double y, const Params& p) {
    if (y <= 0.0) return 0.0;
    return -std::expm1(log_survival(y, p));
}

double log_density(double y, const Params& p) {
    if (y < 0.0) return -kInf;
    if (p.xi < 0.0 && y >= -p.sigma / p.xi) return -kInf;  // closed support
    const double r = y / p.sigma;
    if (std::abs(p.xi) < xi_zero_tol) return -std::log(p.sigma) - r;
    const double arg = 1.0 + p.xi * r;
    if (arg <= 0.0) return -kInf;
    return -std::log(p.sigma) - (1.0 / p.xi + 1.0) * std::log1p(p.xi * r);
}

double density(double y, const Params& p) {
    return std::exp(log_density(y, p));
}

double quantile(double prob, const Params& p) {
    if (!(prob > 0.0 && prob < 1.0))
        throw std::domain_error("gpd::quantile: prob must be in (0, 1)");
    const double log1m = std::log1p(-prob);
    if (std::abs(p.xi) < xi_zero_tol) return -p.sigma * log1m;
    return (p.sigma / p.xi) * std::expm1(-p.xi * log1m);
}

double sample_truncated(double entry, const Params& p, std::mt19937_64& rng) {
    if (!(entry >= 0.0))
        throw std::domain_error("gpd::sample_truncated: entry must be >= 0");
    const double ra = entry / p.sigma;
    if (p.xi < 0.0 && 1.0 + p.xi * ra <= 0.0)
        throw std::domain_error("gpd::sample_truncated: entry outside support");
    const double u = uniform01(rng);  // survival ratio target, in (0, 1)
    if (std::abs(p.xi) < xi_zero_tol) return entry - p.sigma * std::log(u);
    // S(y)/S(entry) = u  =>  1 + xi*y/sigma = (1 + xi*entry/sigma) * u^(-xi)
    const double y = (p.sigma / p.xi) *
                     std::expm1(std::log1p(p.xi * ra) - p.xi * std::log(u));
    return y;
}

}  // namespace lifetail::gpd
