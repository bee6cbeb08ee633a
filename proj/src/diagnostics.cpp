#include "lifetail/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lifetail/gpd.hpp"
#include "lifetail/stats.hpp"

namespace lifetail {

std::vector<double> default_qq_probs() {
    std::vector<double> probs;
    probs.reserve(999);
    for (int i = 1; i <= 999; ++i) probs.push_back(static_cast<double>(i) / 1000.0);
    return probs;
}

QqGrid qq_grid(const FitResult& result, std::span<const Exceedance> data,
               std::vector<double> probs, const std::vector<double>* profile) {
    if (probs.empty()) probs = default_qq_probs();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] > 0.0 && probs[i] < 1.0))
            throw std::invalid_argument("qq_grid: probabilities must be in (0, 1)");
        if (i > 0 && !(probs[i] > probs[i - 1]))
            throw std::invalid_argument("qq_grid: probabilities must be strictly increasing");
    }

    QqGrid grid;
    grid.probs = std::move(probs);

    std::vector<double> deaths;
    double sigma_sum = 0.0;
    std::size_t used = 0;
    for (const auto& rec : data) {
        if (profile && rec.design_row != *profile) continue;
        sigma_sum += std::exp(dot(result.theta_hat.beta, rec.design_row));
        ++used;
        if (rec.event) deaths.push_back(rec.y);
    }
    if (used == 0) throw std::invalid_argument("qq_grid: no matching records");
    if (deaths.empty()) throw std::invalid_argument("qq_grid: no observed deaths");
    grid.pooled_sigma = sigma_sum / static_cast<double>(used);
    grid.n_deaths = deaths.size();
    grid.low_death_warning = deaths.size() < 100;

    std::sort(deaths.begin(), deaths.end());
    const gpd::Params params(grid.pooled_sigma, result.theta_hat.xi);
    grid.theoretical.reserve(grid.probs.size());
    grid.empirical.reserve(grid.probs.size());
    for (double p : grid.probs) {
        grid.theoretical.push_back(gpd::quantile(p, params));
        grid.empirical.push_back(empirical_quantile_sorted(deaths, p));
    }
    return grid;
}

std::vector<SweepRow> threshold_sweep(const std::vector<IndividualRecord>& records,
                                      const CovariateSchema& schema,
                                      const std::vector<double>& thresholds,
                                      const FitOptions& options, double level) {
    if (thresholds.empty())
        throw std::invalid_argument("threshold_sweep: no thresholds given");
    if (!std::is_sorted(thresholds.begin(), thresholds.end()) ||
        std::adjacent_find(thresholds.begin(), thresholds.end()) != thresholds.end())
        throw std::invalid_argument("threshold_sweep: thresholds must be strictly increasing");
    double max_exit = 0.0;
    for (const auto& rec : records) max_exit = std::max(max_exit, rec.exit_age);
    if (thresholds.back() >= max_exit)
        throw std::invalid_argument(
            "threshold_sweep: thresholds must lie below the largest observed age");

    FitOptions fit_options = options;
    if (fit_options.column_names.empty()) fit_options.column_names = schema.column_names();

    std::vector<SweepRow> rows;
    rows.reserve(thresholds.size());
    for (double u : thresholds) {
        SweepRow row;
        row.u = u;
        try {
            const ModelSpec spec{u, schema};
            auto extraction = to_exceedances(records, spec);
            row.n_exceedances = extraction.kept;
            FitResult fit = fit_mle(extraction.data, std::nullopt, fit_options);
            row.converged = fit.converged;
            row.xi_hat = fit.theta_hat.xi;
            row.beta_hat = fit.theta_hat.beta;
            if (fit.converged) {
                auto cis = wald_intervals(fit, level);
                const std::size_t p = fit.theta_hat.beta.size();
                row.beta_lo.resize(p);
                row.beta_hi.resize(p);
                for (std::size_t j = 0; j < p; ++j) {
                    row.beta_lo[j] = cis[j].first;
                    row.beta_hi[j] = cis[j].second;
                }
                row.xi_lo = cis[p].first;
                row.xi_hi = cis[p].second;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ProfileEndpointRow> profile_endpoint_table(
    const FitResult& result, const ModelSpec& spec,
    const std::vector<IndividualRecord>& records, std::size_t min_frequency,
    double level) {
    if (!(result.theta_hat.xi < 0.0))
        throw std::domain_error("profile_endpoint_table: requires xi < 0");

    // Group exceedance records by their full label combination.
    std::map<std::vector<std::string>, std::size_t> freq;
    for (const auto& rec : records) {
        if (rec.exit_age <= spec.threshold_u) continue;
        std::vector<std::string> key;
        key.reserve(spec.schema.covariates.size());
        for (const auto& cov : spec.schema.covariates)
            key.push_back(rec.covariates.at(cov.name));
        ++freq[key];
    }

    std::vector<ProfileEndpointRow> rows;
    for (const auto& [key, count] : freq) {
        if (count <= min_frequency) continue;
        ProfileEndpointRow row;
        row.frequency = count;
        for (std::size_t k = 0; k < key.size(); ++k)
            row.labels[spec.schema.covariates[k].name] = key[k];
        const auto design = encode_profile(row.labels, spec.schema);
        const auto est = endpoint_delta_ci(result, design, spec.threshold_u, level);
        row.x_star = est.x_star;
        row.se = est.se;
        row.lo = est.lo;
        row.hi = est.hi;
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ProfileEndpointRow& a, const ProfileEndpointRow& b) {
                         return a.frequency > b.frequency;
                     });
    return rows;
}

}  // namespace lifetail
