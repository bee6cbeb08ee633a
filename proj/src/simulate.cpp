#include "lifetail/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lifetail/gpd.hpp"
#include "lifetail/io_util.hpp"
#include "lifetail/rng.hpp"

namespace lifetail {

void ScenarioConfig::validate() const {
    schema.validate();
    if (!schema.resolved())
        throw std::invalid_argument("scenario: schema references must be resolved");
    if (true_beta.size() != schema.design_dim())
        throw std::invalid_argument("scenario: beta length must equal the design dimension (" +
                                    std::to_string(schema.design_dim()) + ")");
    if (!(threshold_u > 0.0))
        throw std::invalid_argument("scenario: threshold must be > 0");
    if (n_individuals == 0) throw std::invalid_argument("scenario: n must be > 0");
    if (!(censor_age > threshold_u))
        throw std::invalid_argument("scenario: censor_age must exceed the threshold");
    if (entry == EntryDist::Uniform) {
        if (!(entry_max > 0.0))
            throw std::invalid_argument("scenario: entry_max must be > 0 for uniform entry");
        if (threshold_u + entry_max >= censor_age)
            throw std::invalid_argument(
                "scenario: entry window must end before the censoring age");
    }
    if (random_censor_prob < 0.0 || random_censor_prob > 1.0)
        throw std::invalid_argument("scenario: random_censor_prob must be in [0, 1]");
    if (profiles.empty()) throw std::invalid_argument("scenario: need at least one profile");
    double total = 0.0;
    for (const auto& pw : profiles) {
        if (!(pw.weight >= 0.0))
            throw std::invalid_argument("scenario: profile weights must be >= 0");
        total += pw.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("scenario: profile weights must sum to 1");
    const double max_entry_exc = entry == EntryDist::Uniform ? entry_max : 0.0;
    for (const auto& pw : profiles) {
        const auto row = encode_profile(pw.labels, schema);
        const double sigma = std::exp(dot(true_beta, row));
        if (true_xi < 0.0 && -sigma / true_xi <= max_entry_exc)
            throw std::invalid_argument(
                "scenario: entry window reaches beyond a profile's implied endpoint");
    }
}

std::vector<IndividualRecord> simulate_population(const ScenarioConfig& cfg) {
    cfg.validate();

    struct Prepared {
        const ProfileWeight* pw;
        double cum_weight;
        gpd::Params params;
    };
    std::vector<Prepared> prepared;
    prepared.reserve(cfg.profiles.size());
    double cum = 0.0;
    for (const auto& pw : cfg.profiles) {
        cum += pw.weight;
        const double sigma = std::exp(dot(cfg.true_beta, encode_profile(pw.labels, cfg.schema)));
        prepared.push_back({&pw, cum, gpd::Params(sigma, cfg.true_xi)});
    }
    prepared.back().cum_weight = 1.0;  // guard against rounding in the last bin

    auto rng = substream(cfg.seed, stream_tag::simulate);
    std::vector<IndividualRecord> records;
    records.reserve(cfg.n_individuals);
    for (std::size_t i = 0; i < cfg.n_individuals; ++i) {
        const double up = uniform01(rng);
        std::size_t k = 0;
        while (k + 1 < prepared.size() && up > prepared[k].cum_weight) ++k;
        const Prepared& pick = prepared[k];

        double entry_age = cfg.threshold_u;
        if (cfg.entry == EntryDist::Uniform)
            entry_age += cfg.entry_max * uniform01(rng);
        const double entry_exc = entry_age - cfg.threshold_u;

        const double death_exc = gpd::sample_truncated(entry_exc, pick.params, rng);
        const double death_age = cfg.threshold_u + death_exc;

        double censor_age = cfg.censor_age;
        if (cfg.random_censor_prob > 0.0) {
            const double flip = uniform01(rng);
            const double extra =
                entry_age + (cfg.censor_age - entry_age) * uniform01(rng);
            if (flip < cfg.random_censor_prob) censor_age = std::min(censor_age, extra);
        }

        IndividualRecord rec;
        rec.entry_age = entry_age;
        rec.event = death_age <= censor_age;
        rec.exit_age = rec.event ? death_age : censor_age;
        for (const auto& [name, label] : pick.pw->labels) rec.covariates[name] = label;
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

std::map<std::string, std::string> parse_profile_labels(
    const std::vector<std::string>& tokens, std::size_t first) {
    std::map<std::string, std::string> labels;
    for (std::size_t i = first; i < tokens.size(); ++i) {
        auto eq = tokens[i].find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("scenario profile: expected cov=label, got '" +
                                     tokens[i] + "'");
        labels[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
    }
    return labels;
}

std::vector<std::string> whitespace_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t b = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

}  // namespace

ScenarioConfig parse_scenario_file(const std::string& path) {
    ScenarioConfig cfg;
    std::string schema_path;
    const auto kv = read_key_values(path);
    const std::string dir = path.find('/') != std::string::npos
                                ? path.substr(0, path.find_last_of('/') + 1)
                                : "";
    for (const auto& [key, value] : kv) {
        if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "n") cfg.n_individuals = std::stoull(value);
        else if (key == "threshold") cfg.threshold_u = std::stod(value);
        else if (key == "xi") cfg.true_xi = std::stod(value);
        else if (key == "censor_age") cfg.censor_age = std::stod(value);
        else if (key == "entry_max") cfg.entry_max = std::stod(value);
        else if (key == "random_censor_prob") cfg.random_censor_prob = std::stod(value);
        else if (key == "entry") {
            if (value == "fixed") cfg.entry = EntryDist::FixedAtThreshold;
            else if (value == "uniform") cfg.entry = EntryDist::Uniform;
            else throw std::runtime_error("scenario: entry must be 'fixed' or 'uniform'");
        } else if (key == "schema_file") {
            schema_path = value.find('/') == 0 ? value : dir + value;
        } else if (key == "beta") {
            cfg.true_beta.clear();
            for (const auto& tok : whitespace_tokens(value))
                cfg.true_beta.push_back(std::stod(tok));
        } else if (key == "profile") {
            auto tokens = whitespace_tokens(value);
            if (tokens.empty())
                throw std::runtime_error("scenario: empty profile line");
            ProfileWeight pw;
            pw.weight = std::stod(tokens[0]);
            pw.labels = parse_profile_labels(tokens, 1);
            cfg.profiles.push_back(std::move(pw));
        } else {
            throw std::runtime_error("scenario: unknown key '" + key + "'");
        }
    }
    if (schema_path.empty())
        throw std::runtime_error("scenario: missing schema_file");
    cfg.schema = parse_schema_file(schema_path);
    cfg.validate();
    return cfg;
}

void write_truth_file(const std::string& path, const ScenarioConfig& cfg) {
    KeyValues kv;
    kv.emplace_back("seed", std::to_string(cfg.seed));
    kv.emplace_back("n", std::to_string(cfg.n_individuals));
    kv.emplace_back("threshold", format_double(cfg.threshold_u));
    kv.emplace_back("xi", format_double(cfg.true_xi));
    std::string beta;
    for (std::size_t j = 0; j < cfg.true_beta.size(); ++j) {
        if (j) beta += ' ';
        beta += format_double(cfg.true_beta[j]);
    }
    kv.emplace_back("beta", beta);
    kv.emplace_back("censor_age", format_double(cfg.censor_age));
    kv.emplace_back("entry", cfg.entry == EntryDist::Uniform ? "uniform" : "fixed");
    if (cfg.entry == EntryDist::Uniform)
        kv.emplace_back("entry_max", format_double(cfg.entry_max));
    write_key_values(path, kv);
}

BiasReport naive_vs_corrected(const ScenarioConfig& cfg, int replicates,
                              const FitOptions& options) {
    if (replicates < 1)
        throw std::invalid_argument("naive_vs_corrected: need at least one replicate");
    BiasReport report;
    report.replicates = replicates;
    double bias_c = 0.0, bias_n = 0.0;
    int done_c = 0, done_n = 0;
    for (int r = 0; r < replicates; ++r) {
        ScenarioConfig scenario = cfg;
        scenario.seed = splitmix64(cfg.seed ^ static_cast<std::uint64_t>(r));
        const auto records = simulate_population(scenario);
        const ModelSpec spec{cfg.threshold_u, cfg.schema};
        auto extraction = to_exceedances(records, spec);

        auto naive_data = extraction.data;
        for (auto& e : naive_data) e.a = 0.0;  // deliberately ignore delayed entry

        for (int variant = 0; variant < 2; ++variant) {
            const bool corrected = variant == 0;
            BiasRow row;
            row.replicate = r;
            row.corrected = corrected;
            FitOptions fit_options = options;
            fit_options.compute_covariance = false;
            try {
                FitResult fit = fit_mle(corrected ? extraction.data : naive_data,
                                        std::nullopt, fit_options);
                row.converged = fit.converged;
                row.xi_hat = fit.theta_hat.xi;
                row.beta_hat = fit.theta_hat.beta;
            } catch (const std::exception&) {
                row.converged = false;
            }
            report.rows.push_back(std::move(row));
        }
        const BiasRow& rc = report.rows[report.rows.size() - 2];
        const BiasRow& rn = report.rows[report.rows.size() - 1];
        if (rc.converged) {
            bias_c += rc.xi_hat - cfg.true_xi;
            ++done_c;
        }
        if (rn.converged) {
            bias_n += rn.xi_hat - cfg.true_xi;
            ++done_n;
        }
        if (rc.converged && rn.converged &&
            std::abs(rc.xi_hat - cfg.true_xi) < std::abs(rn.xi_hat - cfg.true_xi))
            ++report.corrected_better;
    }
    report.mean_bias_xi_corrected = done_c ? bias_c / done_c : 0.0;
    report.mean_bias_xi_naive = done_n ? bias_n / done_n : 0.0;
    return report;
}

}  // namespace lifetail
