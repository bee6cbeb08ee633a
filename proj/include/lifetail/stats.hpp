#pragma once

#include <span>
#include <vector>

namespace lifetail {

// Standard normal CDF.
double normal_cdf(double x);

// Inverse standard normal CDF, accurate to full double precision
// (rational approximation polished with Halley steps on erfc).
double normal_quantile(double p);

// Quantile of a sorted sample by linear interpolation between order
// statistics at position p*(m-1)+1 (1-indexed); the single convention
// used everywhere in this library.
double empirical_quantile_sorted(std::span<const double> sorted, double p);

// Two-sided Kolmogorov-Smirnov statistic of a sorted sample against a
// CDF evaluated at each point.
double ks_statistic_sorted(std::span<const double> sorted,
                           std::span<const double> cdf_values);

}  // namespace lifetail
