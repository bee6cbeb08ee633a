#pragma once

#include <span>
#include <vector>

#include "lifetail/design.hpp"

namespace lifetail {

// Model parameters: scale regression coefficients (log sigma_i = beta .
// z_i) plus the common shape xi.
struct ParamVector {
    std::vector<double> beta;
    double xi = 0.0;

    std::size_t dim() const { return beta.size() + 1; }
    std::vector<double> flat() const;
    static ParamVector from_flat(std::span<const double> theta);
};

// True iff every record satisfies 1 + xi * y_i * exp(-beta . z_i) > 0
// (censored or not); this implies the entry-exceedance condition since
// a_i < y_i.
bool feasible(const ParamVector& theta, std::span<const Exceedance> data);

// Full log-likelihood under left truncation and right censoring.
// Infeasible parameters yield -infinity so line searches can backtrack.
// Contributions are accumulated with compensated summation in data
// order, so results are bit-stable for a fixed dataset ordering.
double log_likelihood(const ParamVector& theta, std::span<const Exceedance> data);

// Analytic gradient (d/d beta, d/d xi), length |beta| + 1. Throws
// std::domain_error at infeasible points.
std::vector<double> gradient(const ParamVector& theta, std::span<const Exceedance> data);

}  // namespace lifetail
