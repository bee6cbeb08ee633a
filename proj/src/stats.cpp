#include "lifetail/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lifetail {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace {

// Acklam's rational approximation, ~1.15e-9 relative error.
double normal_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must be in (0, 1)");
    double x = normal_quantile_approx(p);
    // Two Halley refinements drive the approximation to machine precision.
    for (int i = 0; i < 2; ++i) {
        double e = normal_cdf(x) - p;
        double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double empirical_quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty())
        throw std::invalid_argument("empirical_quantile_sorted: empty sample");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::domain_error("empirical_quantile_sorted: p must be in [0, 1]");
    const std::size_t m = sorted.size();
    if (m == 1) return sorted[0];
    double h = p * static_cast<double>(m - 1);  // 0-indexed position
    double fl = std::floor(h);
    std::size_t lo = static_cast<std::size_t>(fl);
    std::size_t hi = std::min(lo + 1, m - 1);
    double w = h - fl;
    return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

double ks_statistic_sorted(std::span<const double> sorted,
                           std::span<const double> cdf_values) {
    if (sorted.size() != cdf_values.size() || sorted.empty())
        throw std::invalid_argument("ks_statistic_sorted: size mismatch");
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double f = cdf_values[i];
        double hi = (static_cast<double>(i) + 1.0) / n - f;
        double lo = f - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

}  // namespace lifetail
