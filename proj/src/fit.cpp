#include "lifetail/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lifetail/stats.hpp"

namespace lifetail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

ParamVector default_init(std::span<const Exceedance> data, std::size_t p) {
    double sum = 0.0;
    std::size_t deaths = 0;
    for (const auto& rec : data)
        if (rec.event) {
            sum += rec.y;
            ++deaths;
        }
    ParamVector theta;
    theta.beta.assign(p, 0.0);
    theta.beta[0] = std::log(sum / static_cast<double>(deaths));
    theta.xi = -0.1;
    // The mean-exceedance scale can be infeasible when the sample maximum
    // is extreme; widen until the starting point is valid.
    for (int tries = 0; tries < 64 && !feasible(theta, data); ++tries)
        theta.beta[0] += std::log(1.5);
    if (!feasible(theta, data))
        throw std::runtime_error("fit_mle: could not find a feasible starting point");
    return theta;
}

void check_design(std::span<const Exceedance> data, const FitOptions& options) {
    const std::size_t p = data.front().design_row.size();
    std::size_t deaths = 0;
    for (const auto& rec : data) {
        if (rec.design_row.size() != p)
            throw std::invalid_argument("fit_mle: inconsistent design row lengths");
        if (rec.event) ++deaths;
    }
    if (deaths < p + 1)
        throw std::invalid_argument("fit_mle: need at least " + std::to_string(p + 1) +
                                    " death observations, got " + std::to_string(deaths));
    for (std::size_t j = 1; j < p; ++j) {
        bool any = false;
        for (const auto& rec : data)
            if (rec.design_row[j] != 0.0) {
                any = true;
                break;
            }
        if (!any) {
            std::string name = j < options.column_names.size()
                                   ? options.column_names[j]
                                   : "design column " + std::to_string(j);
            throw std::runtime_error(
                "fit_mle: rank-deficient design: '" + name +
                "' is zero for every exceedance (no observations in that category)");
        }
    }
}

struct LineSearchResult {
    double alpha = 0.0;
    double f = kInf;
    std::vector<double> grad;
    bool ok = false;
};

}  // namespace

FitResult fit_mle(std::span<const Exceedance> data, std::optional<ParamVector> init,
                  const FitOptions& options) {
    if (data.empty()) throw std::invalid_argument("fit_mle: empty dataset");
    const std::size_t p = data.front().design_row.size();
    check_design(data, options);

    ParamVector theta0 = init ? *init : default_init(data, p);
    if (theta0.beta.size() != p)
        throw std::invalid_argument("fit_mle: init has wrong beta length");
    if (!feasible(theta0, data))
        throw std::invalid_argument("fit_mle: initial parameters infeasible for the data");

    const std::size_t n = p + 1;
    // Minimize f = -log_likelihood on the flat parameter vector.
    auto fval = [&](const std::vector<double>& x) {
        return -log_likelihood(ParamVector::from_flat(x), data);
    };
    auto fgrad = [&](const std::vector<double>& x) {
        auto g = gradient(ParamVector::from_flat(x), data);
        for (double& v : g) v = -v;
        return g;
    };

    std::vector<double> x = theta0.flat();
    double fx = fval(x);
    if (!std::isfinite(fx))
        throw std::invalid_argument("fit_mle: initial parameters infeasible for the data");
    std::vector<double> gx = fgrad(x);

    Matrix H = Matrix::identity(n);
    const double c1 = 1e-4, c2 = 0.9;

    bool converged = false;
    int iter = 0;
    double last_rel_step = kInf;

    auto grad_ok = [&](const std::vector<double>& g, double f) {
        return max_abs(g) < options.grad_tol * std::max(1.0, std::abs(f));
    };

    for (iter = 0; iter < options.max_iterations; ++iter) {
        if (grad_ok(gx, fx) && last_rel_step < options.step_tol) {
            converged = true;
            break;
        }

        std::vector<double> dir = matvec(H, gx);
        for (double& v : dir) v = -v;
        double dg = dot(dir, gx);
        if (!(dg < 0.0)) {  // not a descent direction: reset to steepest descent
            H = Matrix::identity(n);
            dir = gx;
            for (double& v : dir) v = -v;
            dg = dot(dir, gx);
        }

        // Weak Wolfe line search by bisection; +inf trial values (the
        // infeasibility sentinel) shrink the bracket like a failed
        // sufficient-decrease test.
        LineSearchResult ls;
        double lo = 0.0, hi = kInf, alpha = 1.0;
        std::vector<double> xt(n);
        for (int k = 0; k < 64; ++k) {
            for (std::size_t j = 0; j < n; ++j) xt[j] = x[j] + alpha * dir[j];
            double ft = fval(xt);
            if (!(ft <= fx + c1 * alpha * dg)) {
                hi = alpha;
            } else {
                std::vector<double> gt = fgrad(xt);
                if (dot(gt, dir) < c2 * dg) {
                    lo = alpha;
                } else {
                    ls = {alpha, ft, std::move(gt), true};
                    break;
                }
            }
            alpha = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * alpha;
            if (alpha < 1e-20) break;
        }
        if (!ls.ok) break;  // line search exhausted; report best point so far

        for (std::size_t j = 0; j < n; ++j) xt[j] = x[j] + ls.alpha * dir[j];
        std::vector<double> s(n), ygrad(n);
        double rel_step = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = xt[j] - x[j];
            ygrad[j] = ls.grad[j] - gx[j];
            rel_step = std::max(rel_step, std::abs(s[j]) / std::max(1.0, std::abs(xt[j])));
        }
        last_rel_step = rel_step;

        const double ys = dot(ygrad, s);
        if (ys > 1e-12 * std::sqrt(dot(s, s)) * std::sqrt(dot(ygrad, ygrad))) {
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / ys;
            std::vector<double> hy = matvec(H, ygrad);
            const double yhy = dot(ygrad, hy);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    H(i, j) += -rho * (s[i] * hy[j] + hy[i] * s[j]) +
                               rho * (1.0 + rho * yhy) * s[i] * s[j];
        }

        x = xt;
        fx = ls.f;
        gx = std::move(ls.grad);
    }

    if (!converged && grad_ok(gx, fx)) converged = true;

    FitResult result;
    result.theta_hat = ParamVector::from_flat(x);
    result.loglik = -fx;
    result.converged = converged;
    result.iterations = iter;
    result.gradient_norm = max_abs(gx);
    if (options.compute_covariance && converged)
        result.covariance = observed_fisher(result.theta_hat, data);
    return result;
}

Matrix covariance_from_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& grad,
    const std::vector<double>& theta) {
    const std::size_t n = theta.size();
    Matrix hessian(n, n);
    std::vector<double> tp(theta.begin(), theta.end()), tm(theta.begin(), theta.end());
    for (std::size_t j = 0; j < n; ++j) {
        const double h = 1e-5 * std::max(1.0, std::abs(theta[j]));
        tp[j] = theta[j] + h;
        tm[j] = theta[j] - h;
        const auto gp = grad(tp);
        const auto gm = grad(tm);
        for (std::size_t i = 0; i < n; ++i) hessian(i, j) = (gp[i] - gm[i]) / (2.0 * h);
        tp[j] = theta[j];
        tm[j] = theta[j];
    }
    Matrix neg = symmetrized(hessian);
    for (double& v : neg.data) v = -v;
    auto cov = spd_inverse(neg);
    if (!cov)
        throw NumericalError(
            "observed Fisher information is not positive definite; the optimum may lie "
            "on the feasibility boundary -- check the threshold choice and model");
    return *cov;
}

Matrix observed_fisher(const ParamVector& theta_hat, std::span<const Exceedance> data) {
    return covariance_from_gradient(
        [&](const std::vector<double>& t) {
            return gradient(ParamVector::from_flat(t), data);
        },
        theta_hat.flat());
}

std::vector<std::pair<double, double>> wald_intervals(const FitResult& result,
                                                      double level) {
    if (!(level > 0.0 && level < 1.0))
        throw std::domain_error("wald_intervals: level must be in (0, 1)");
    if (result.covariance.rows != result.theta_hat.dim())
        throw std::invalid_argument("wald_intervals: result has no covariance");
    const double z = normal_quantile(0.5 + level / 2.0);
    const auto flat = result.theta_hat.flat();
    std::vector<std::pair<double, double>> out;
    out.reserve(flat.size());
    for (std::size_t j = 0; j < flat.size(); ++j) {
        double se = std::sqrt(std::max(result.covariance(j, j), 0.0));
        out.emplace_back(flat[j] - z * se, flat[j] + z * se);
    }
    return out;
}

}  // namespace lifetail
