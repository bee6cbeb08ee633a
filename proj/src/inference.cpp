#include "lifetail/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "lifetail/rng.hpp"
#include "lifetail/stats.hpp"

namespace lifetail {

double endpoint(const ParamVector& theta, std::span<const double> profile, double u) {
    if (profile.size() != theta.beta.size())
        throw std::invalid_argument("endpoint: profile length mismatch");
    if (!(theta.xi < 0.0))
        throw std::domain_error(
            "endpoint: no finite endpoint (xi >= 0 implies unbounded lifespan)");
    return u - std::exp(dot(theta.beta, profile)) / theta.xi;
}

std::vector<double> endpoint_gradient(const ParamVector& theta,
                                      std::span<const double> profile) {
    if (!(theta.xi < 0.0))
        throw std::domain_error("endpoint_gradient: requires xi < 0");
    const double scale = std::exp(dot(theta.beta, profile));
    std::vector<double> g(theta.dim());
    for (std::size_t j = 0; j < profile.size(); ++j)
        g[j] = -scale / theta.xi * profile[j];
    g[profile.size()] = scale / (theta.xi * theta.xi);
    return g;
}

EndpointEstimate endpoint_delta_ci(const FitResult& result,
                                   std::span<const double> profile, double u,
                                   double level) {
    if (result.covariance.rows != result.theta_hat.dim())
        throw std::invalid_argument("endpoint_delta_ci: result has no covariance");
    if (!(level > 0.0 && level < 1.0))
        throw std::domain_error("endpoint_delta_ci: level must be in (0, 1)");
    EndpointEstimate est;
    est.profile.assign(profile.begin(), profile.end());
    est.x_star = endpoint(result.theta_hat, profile, u);
    const auto g = endpoint_gradient(result.theta_hat, profile);
    const auto cg = matvec(result.covariance, g);
    const double var = dot(g, cg);
    if (var < 0.0)
        throw std::runtime_error(
            "endpoint_delta_ci: propagated variance is negative; covariance matrix is "
            "not usable");
    est.se = std::sqrt(var);
    const double z = normal_quantile(0.5 + level / 2.0);
    est.lo = est.x_star - z * est.se;
    est.hi = est.x_star + z * est.se;
    est.method = "fisher-delta";
    return est;
}

std::vector<ContrastRow> contrast_table(const FitResult& result,
                                        const CovariateSchema& schema,
                                        const std::map<std::string, std::string>& base,
                                        double u, double level) {
    const auto base_row = encode_profile(base, schema);
    const double base_endpoint = endpoint(result.theta_hat, base_row, u);
    const auto base_grad = endpoint_gradient(result.theta_hat, base_row);
    const bool have_cov = result.covariance.rows == result.theta_hat.dim();
    const double z = normal_quantile(0.5 + level / 2.0);

    std::vector<ContrastRow> rows;
    for (const auto& cov : schema.covariates) {
        const std::string& current = base.at(cov.name);
        for (const auto& cat : cov.categories) {
            if (cat == current) continue;
            auto labels = base;
            labels[cov.name] = cat;
            const auto row = encode_profile(labels, schema);
            ContrastRow cr;
            cr.covariate = cov.name;
            cr.level = cat;
            cr.delta = endpoint(result.theta_hat, row, u) - base_endpoint;
            if (have_cov) {
                auto g = endpoint_gradient(result.theta_hat, row);
                for (std::size_t j = 0; j < g.size(); ++j) g[j] -= base_grad[j];
                const double var = dot(g, matvec(result.covariance, g));
                if (var < 0.0)
                    throw std::runtime_error("contrast_table: negative propagated variance");
                cr.se = std::sqrt(var);
                cr.lo = cr.delta - z * cr.se;
                cr.hi = cr.delta + z * cr.se;
            } else {
                cr.lo = cr.hi = cr.delta;
            }
            rows.push_back(std::move(cr));
        }
    }
    return rows;
}

BootstrapRun bootstrap(std::span<const Exceedance> data, const FitResult& original,
                       int replicates, std::uint64_t seed,
                       const BootstrapOptions& options) {
    if (replicates < 1)
        throw std::invalid_argument("bootstrap: need at least one replicate");
    if (!original.converged)
        throw std::invalid_argument("bootstrap: original fit did not converge");
    const std::size_t n = data.size();

    FitOptions fit_options = options.fit;
    fit_options.compute_covariance = false;

    std::vector<std::optional<ParamVector>> slots(static_cast<std::size_t>(replicates));
    auto run_replicate = [&](std::uint64_t r) {
        auto rng = substream(seed, stream_tag::bootstrap, r);
        std::vector<std::size_t> idx;
        if (options.resampler) {
            idx = options.resampler(r, n, rng);
        } else {
            idx.resize(n);
            for (std::size_t i = 0; i < n; ++i) idx[i] = uniform_index(rng, n);
        }
        std::vector<Exceedance> sample;
        sample.reserve(idx.size());
        for (std::size_t i : idx) sample.push_back(data[i]);
        try {
            FitResult fit = fit_mle(sample, original.theta_hat, fit_options);
            if (fit.converged) slots[r] = std::move(fit.theta_hat);
        } catch (const std::exception&) {
            // counted below as a failure
        }
    };

    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        for (int r = 0; r < replicates; ++r) run_replicate(static_cast<std::uint64_t>(r));
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (int r = t; r < replicates; r += threads)
                    run_replicate(static_cast<std::uint64_t>(r));
            });
        for (auto& th : pool) th.join();
    }

    BootstrapRun run;
    run.replicates = replicates;
    run.seed = seed;
    for (auto& slot : slots)
        if (slot)
            run.estimates.push_back(std::move(*slot));
        else
            ++run.failures;
    run.flagged = run.failures > replicates / 10;
    return run;
}

std::pair<double, double> bootstrap_percentile_ci(
    const BootstrapRun& run, const std::function<double(const ParamVector&)>& functional,
    double level) {
    if (run.estimates.size() < 100)
        throw std::invalid_argument(
            "bootstrap_percentile_ci: need at least 100 converged replicates, got " +
            std::to_string(run.estimates.size()));
    if (!(level > 0.0 && level < 1.0))
        throw std::domain_error("bootstrap_percentile_ci: level must be in (0, 1)");
    std::vector<double> values;
    values.reserve(run.estimates.size());
    for (const auto& est : run.estimates) values.push_back(functional(est));
    std::sort(values.begin(), values.end());
    const double alpha = 1.0 - level;
    return {empirical_quantile_sorted(values, alpha / 2.0),
            empirical_quantile_sorted(values, 1.0 - alpha / 2.0)};
}

}  // namespace lifetail
