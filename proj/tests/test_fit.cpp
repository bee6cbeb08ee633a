#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lifetail/fit.hpp"
#include "lifetail/gpd.hpp"
#include "lifetail/rng.hpp"
#include "testutil.hpp"

using namespace lifetail;

namespace {

std::vector<Exceedance> intercept_only_sample(std::size_t n, double sigma, double xi,
                                              std::uint64_t seed) {
    auto rng = substream(seed, 0xf17);
    gpd::Params params(sigma, xi);
    std::vector<Exceedance> data;
    data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Exceedance e;
        e.y = gpd::sample_truncated(0.0, params, rng);
        e.a = 0.0;
        e.event = true;
        e.design_row = {1.0};
        data.push_back(std::move(e));
    }
    return data;
}

}  // namespace

TEST_CASE("recovers known parameters from a clean sample") {
    const double beta0 = 0.74, xi = -0.13;
    auto data = intercept_only_sample(25000, std::exp(beta0), xi, 31);
    auto fit = fit_mle(data);
    REQUIRE(fit.converged);
    CHECK(fit.gradient_norm < 1e-6 * static_cast<double>(data.size()));
    const double se_b = std::sqrt(fit.covariance(0, 0));
    const double se_xi = std::sqrt(fit.covariance(1, 1));
    CHECK(std::abs(fit.theta_hat.beta[0] - beta0) < 3.0 * se_b);
    CHECK(std::abs(fit.theta_hat.xi - xi) < 3.0 * se_xi);
    // log-likelihood does not fall below the starting point
    ParamVector init{{std::log(2.0)}, -0.1};
    CHECK(fit.loglik >= log_likelihood(init, data));
}

TEST_CASE("exponential data: fitted scale tracks the sample mean") {
    auto data = intercept_only_sample(8000, 1.4, 0.0, 77);
    double mean = 0.0;
    for (const auto& rec : data) mean += rec.y;
    mean /= static_cast<double>(data.size());
    auto fit = fit_mle(data);
    REQUIRE(fit.converged);
    const double sigma_hat = std::exp(fit.theta_hat.beta[0]);
    const double se_sigma = sigma_hat * std::sqrt(fit.covariance(0, 0));
    CHECK(std::abs(sigma_hat - mean) < 2.0 * se_sigma);
}

TEST_CASE("agrees with a brute-force lattice search") {
    auto data = intercept_only_sample(2000, std::exp(0.8), -0.18, 13);
    auto fit = fit_mle(data);
    REQUIRE(fit.converged);

    double mean = 0.0;
    for (const auto& rec : data) mean += rec.y;
    mean /= static_cast<double>(data.size());
    const double b_lo = std::log(mean) - 0.3, b_hi = std::log(mean) + 0.3;
    const double x_lo = -0.35, x_hi = 0.15;
    const int nb = 50, nx = 40;  // 2000-point lattice
    double best = -1e300, best_b = 0.0, best_x = 0.0;
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nx; ++j) {
            const double b = b_lo + (b_hi - b_lo) * i / (nb - 1);
            const double x = x_lo + (x_hi - x_lo) * j / (nx - 1);
            const double ll = log_likelihood(ParamVector{{b}, x}, data);
            if (ll > best) {
                best = ll;
                best_b = b;
                best_x = x;
            }
        }
    CHECK(std::abs(fit.theta_hat.beta[0] - best_b) <= (b_hi - b_lo) / (nb - 1));
    CHECK(std::abs(fit.theta_hat.xi - best_x) <= (x_hi - x_lo) / (nx - 1));
    CHECK(fit.loglik >= best);
}

TEST_CASE("quadratic toy: differencing path reproduces the exact covariance") {
    // grad of -0.5 theta^T A theta is -A theta; covariance must be A^{-1}
    const double a11 = 2.0, a12 = 0.3, a22 = 1.0;
    auto grad = [&](const std::vector<double>& t) {
        return std::vector<double>{-(a11 * t[0] + a12 * t[1]),
                                   -(a12 * t[0] + a22 * t[1])};
    };
    auto cov = covariance_from_gradient(grad, {0.5, -0.2});
    const double det = a11 * a22 - a12 * a12;
    CHECK(cov(0, 0) == doctest::Approx(a22 / det).epsilon(1e-6));
    CHECK(cov(1, 1) == doctest::Approx(a11 / det).epsilon(1e-6));
    CHECK(cov(0, 1) == doctest::Approx(-a12 / det).epsilon(1e-6));
    CHECK(cov(0, 1) == cov(1, 0));

    // non-positive-definite case raises instead of pseudo-inverting
    auto bad = [&](const std::vector<double>& t) {
        return std::vector<double>{t[0], t[1]};  // Hessian +I, so -H is negative
    };
    CHECK_THROWS_AS(covariance_from_gradient(bad, {0.0, 0.0}), std::runtime_error);
}

TEST_CASE("observed Fisher at the optimum has a positive diagonal") {
    auto data = intercept_only_sample(4000, 2.0, -0.15, 3);
    auto fit = fit_mle(data);
    REQUIRE(fit.converged);
    for (std::size_t j = 0; j < fit.covariance.rows; ++j)
        CHECK(fit.covariance(j, j) > 0.0);
    auto direct = observed_fisher(fit.theta_hat, data);
    for (std::size_t j = 0; j < direct.rows; ++j)
        CHECK(direct(j, j) == doctest::Approx(fit.covariance(j, j)).epsilon(1e-12));
}

TEST_CASE("Wald intervals") {
    SUBCASE("matches an externally reported shape interval") {
        FitResult r;
        r.theta_hat = ParamVector{{0.742}, -0.1340};
        r.converged = true;
        r.covariance = Matrix(2, 2);
        r.covariance(0, 0) = 1e-4;
        r.covariance(1, 1) = 0.00518 * 0.00518;
        auto ci = wald_intervals(r, 0.95);
        CHECK(ci[1].first == doctest::Approx(-0.1442).epsilon(5e-4));
        CHECK(ci[1].second == doctest::Approx(-0.1239).epsilon(5e-4));
        CHECK(ci[1].first <= r.theta_hat.xi);
        CHECK(ci[1].second >= r.theta_hat.xi);
    }
    SUBCASE("quadratic toy matches analytic normal quantiles") {
        const double a11 = 2.0, a12 = 0.3, a22 = 1.0;
        auto grad = [&](const std::vector<double>& t) {
            return std::vector<double>{-(a11 * t[0] + a12 * t[1]),
                                       -(a12 * t[0] + a22 * t[1])};
        };
        FitResult r;
        r.theta_hat = ParamVector{{0.5}, -0.2};
        r.converged = true;
        r.covariance = covariance_from_gradient(grad, {0.5, -0.2});
        auto ci = wald_intervals(r, 0.95);
        const double z975 = 1.959963984540054;
        const double det = a11 * a22 - a12 * a12;
        CHECK(ci[0].first ==
              doctest::Approx(0.5 - z975 * std::sqrt(a22 / det)).epsilon(1e-9));
        CHECK(ci[1].second ==
              doctest::Approx(-0.2 + z975 * std::sqrt(a11 / det)).epsilon(1e-9));
    }
    SUBCASE("interval collapses to the point as the level vanishes") {
        FitResult r;
        r.theta_hat = ParamVector{{1.0}, -0.1};
        r.converged = true;
        r.covariance = Matrix::identity(2);
        auto ci = wald_intervals(r, 1e-12);
        CHECK(std::abs(ci[0].second - ci[0].first) < 1e-10);
        CHECK(ci[0].first == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("estimate is invariant to data permutation") {
    auto data = intercept_only_sample(6000, 2.1, -0.14, 101);
    auto fit1 = fit_mle(data);
    auto shuffled = data;
    std::mt19937_64 rng(9);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto fit2 = fit_mle(shuffled);
    REQUIRE(fit1.converged);
    REQUIRE(fit2.converged);
    CHECK(std::abs(fit1.theta_hat.beta[0] - fit2.theta_hat.beta[0]) < 1e-8);
    CHECK(std::abs(fit1.theta_hat.xi - fit2.theta_hat.xi) < 1e-8);
}

TEST_CASE("changing the reference level is a pure reparameterization") {
    auto schema_f = testutil::small_schema();  // references: female, collective
    auto schema_m = schema_f;
    schema_m.covariates[0].reference = "male";

    auto cfg = testutil::small_scenario(4000, 5);
    cfg.entry = EntryDist::FixedAtThreshold;
    cfg.entry_max = 0.0;
    auto records = simulate_population(cfg);

    auto ex_f = to_exceedances(records, ModelSpec{100.0, schema_f});
    auto ex_m = to_exceedances(records, ModelSpec{100.0, schema_m});
    auto fit_f = fit_mle(ex_f.data);
    auto fit_m = fit_mle(ex_m.data);
    REQUIRE(fit_f.converged);
    REQUIRE(fit_m.converged);

    CHECK(std::abs(fit_f.theta_hat.xi - fit_m.theta_hat.xi) < 1e-6);
    // intercept moves by the sex effect, the sex coefficient flips sign
    CHECK(fit_m.theta_hat.beta[0] ==
          doctest::Approx(fit_f.theta_hat.beta[0] + fit_f.theta_hat.beta[1]).epsilon(1e-6));
    CHECK(fit_m.theta_hat.beta[1] == doctest::Approx(-fit_f.theta_hat.beta[1]).epsilon(1e-6));
    // fitted per-record scales are unchanged
    for (std::size_t i = 0; i < ex_f.data.size(); ++i) {
        const double s_f = std::exp(dot(fit_f.theta_hat.beta, ex_f.data[i].design_row));
        const double s_m = std::exp(dot(fit_m.theta_hat.beta, ex_m.data[i].design_row));
        CHECK(s_f == doctest::Approx(s_m).epsilon(1e-6));
    }
}

TEST_CASE("error paths") {
    SUBCASE("rank-deficient design names the empty column") {
        auto data = intercept_only_sample(50, 2.0, -0.1, 1);
        for (auto& rec : data) rec.design_row = {1.0, 0.0};
        FitOptions options;
        options.column_names = {"(intercept)", "sex=male"};
        CHECK_THROWS_WITH_AS(fit_mle(data, std::nullopt, options),
                             doctest::Contains("sex=male"), std::runtime_error);
    }
    SUBCASE("too few deaths") {
        auto data = intercept_only_sample(10, 2.0, -0.1, 2);
        for (auto& rec : data) rec.event = false;
        data[0].event = true;
        CHECK_THROWS_AS(fit_mle(data), std::invalid_argument);
    }
    SUBCASE("iteration cap yields a non-converged result, not a failure") {
        auto data = intercept_only_sample(2000, 2.0, -0.15, 3);
        FitOptions options;
        options.max_iterations = 1;
        options.compute_covariance = false;
        auto fit = fit_mle(data, ParamVector{{0.2}, 0.2}, options);
        CHECK_FALSE(fit.converged);
        CHECK(fit.loglik >= log_likelihood(ParamVector{{0.2}, 0.2}, data));
    }
    SUBCASE("infeasible init is rejected") {
        auto data = intercept_only_sample(100, 2.0, -0.1, 4);
        CHECK_THROWS_AS(fit_mle(data, ParamVector{{-3.0}, -0.9}), std::invalid_argument);
    }
}
