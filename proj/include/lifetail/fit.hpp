#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lifetail/design.hpp"
#include "lifetail/likelihood.hpp"
#include "lifetail/linalg.hpp"

namespace lifetail {

// Raised when an estimation step fails numerically (as opposed to bad
// inputs): e.g. the observed Fisher information is not positive definite.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitOptions {
    int max_iterations = 500;
    // Converged when max|grad l| < grad_tol * max(1, |l|) and the last
    // relative parameter step is below step_tol.
    double grad_tol = 1e-6;
    double step_tol = 1e-9;
    bool compute_covariance = true;
    // Optional design column names for diagnostics (rank checks).
    std::vector<std::string> column_names;
};

struct FitResult {
    ParamVector theta_hat;
    double loglik = 0.0;
    Matrix covariance;  // empty when not computed
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;  // max-norm of the log-likelihood gradient
};

// Maximum likelihood fit via BFGS with analytic gradients and a weak
// Wolfe line search that backtracks through the -inf feasibility
// sentinel. Deterministic for fixed inputs and options.
FitResult fit_mle(std::span<const Exceedance> data,
                  std::optional<ParamVector> init = std::nullopt,
                  const FitOptions& options = {});

// Covariance estimate: inverse of the negative Hessian, the Hessian
// obtained by central finite differences of `grad` with per-coordinate
// step 1e-5 * max(1, |theta_j|), symmetrized before inversion. Throws
// when the negative Hessian is not positive definite.
Matrix covariance_from_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& grad,
    const std::vector<double>& theta);

Matrix observed_fisher(const ParamVector& theta_hat, std::span<const Exceedance> data);

// Per-parameter Wald intervals theta_j +/- z_{alpha/2} * sqrt(Cov_jj).
std::vector<std::pair<double, double>> wald_intervals(const FitResult& result,
                                                      double level);

}  // namespace lifetail
