#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lifetail/design.hpp"
#include "lifetail/diagnostics.hpp"
#include "lifetail/fit.hpp"
#include "lifetail/gpd.hpp"
#include "lifetail/inference.hpp"
#include "lifetail/io_util.hpp"
#include "lifetail/likelihood.hpp"
#include "lifetail/simulate.hpp"

namespace fs = std::filesystem;
using namespace lifetail;

namespace {

constexpr const char* kVersion = "0.1.0";

// Accumulates the run manifest: tool version, the exact argument list
// for a rerun, option echo, and input/output checksums.
class Manifest {
  public:
    Manifest(std::string command, std::vector<std::string> args)
        : command_(std::move(command)) {
        std::string joined;
        for (const auto& a : args) {
            if (!joined.empty()) joined += ' ';
            joined += a;
        }
        kv_.emplace_back("tool", std::string("lifetail ") + kVersion);
        kv_.emplace_back("command", command_);
        kv_.emplace_back("args", joined);
    }

    void option(const std::string& key, const std::string& value) {
        kv_.emplace_back("opt." + key, value);
    }
    void input(const std::string& path) {
        kv_.emplace_back("input." + fs::path(path).filename().string(),
                         file_checksum(path));
    }
    void output(const std::string& path) { outputs_.push_back(path); }

    void write(const fs::path& dir) {
        for (const auto& path : outputs_)
            kv_.emplace_back("output." + fs::path(path).filename().string(),
                             file_checksum(path));
        write_key_values((dir / "run.manifest").string(), kv_);
    }

  private:
    std::string command_;
    KeyValues kv_;
    std::vector<std::string> outputs_;
};

fs::path ensure_outdir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("output directory not writable: " + out);
    return dir;
}

std::map<std::string, std::string> parse_labels(const std::string& text) {
    std::map<std::string, std::string> labels;
    for (const auto& part : split(text, ',')) {
        auto eq = part.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("expected cov=label, got '" + part + "'");
        labels[trim(part.substr(0, eq))] = trim(part.substr(eq + 1));
    }
    return labels;
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> values;
    for (const auto& part : split(text, ',')) values.push_back(std::stod(trim(part)));
    return values;
}

CovariateSchema load_resolved_schema(const std::string& schema_path,
                                     const std::vector<IndividualRecord>* records) {
    auto schema = parse_schema_file(schema_path);
    if (!schema.resolved()) {
        if (!records)
            throw std::runtime_error(
                "schema has unresolved reference levels (mark one with '*') and no "
                "input data is available to resolve them");
        auto copy = schema;
        resolve_references(copy, *records);
        return copy;
    }
    return schema;
}

void write_schema(const fs::path& path, const CovariateSchema& schema) {
    std::ofstream out(path);
    for (const auto& cov : schema.covariates) {
        out << cov.name << " = ";
        for (std::size_t i = 0; i < cov.categories.size(); ++i) {
            if (i) out << ',';
            out << cov.categories[i];
            if (cov.categories[i] == cov.reference) out << '*';
        }
        out << '\n';
    }
}

void write_fit_csv(const fs::path& path, const FitResult& fit,
                   const std::vector<std::string>& terms, double level) {
    std::ofstream out(path);
    out << "term,estimate,se,lo,hi\n";
    const auto flat = fit.theta_hat.flat();
    const bool have_cov = fit.covariance.rows == flat.size();
    std::vector<std::pair<double, double>> cis;
    if (have_cov) cis = wald_intervals(fit, level);
    for (std::size_t j = 0; j < flat.size(); ++j) {
        out << terms[j] << ',' << format_double(flat[j]);
        if (have_cov) {
            out << ',' << format_double(std::sqrt(fit.covariance(j, j))) << ','
                << format_double(cis[j].first) << ',' << format_double(cis[j].second);
        } else {
            out << ",,,";
        }
        out << '\n';
    }
}

void write_covariance_csv(const fs::path& path, const Matrix& cov,
                          const std::vector<std::string>& terms) {
    std::ofstream out(path);
    out << "term";
    for (const auto& t : terms) out << ',' << t;
    out << '\n';
    for (std::size_t i = 0; i < cov.rows; ++i) {
        out << terms[i];
        for (std::size_t j = 0; j < cov.cols; ++j) out << ',' << format_double(cov(i, j));
        out << '\n';
    }
}

struct StoredFit {
    FitResult fit;
    std::vector<std::string> terms;
};

StoredFit read_fit_dir(const std::string& dir) {
    StoredFit stored;
    std::ifstream in(fs::path(dir) / "fit.csv");
    if (!in)
        throw std::runtime_error("cannot open " + dir + "/fit.csv (run 'fit' first)");
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> flat;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        stored.terms.push_back(fields[0]);
        flat.push_back(std::stod(fields[1]));
    }
    if (flat.size() < 2) throw std::runtime_error("fit.csv has too few rows");
    stored.fit.theta_hat = ParamVector::from_flat(flat);
    stored.fit.converged = true;

    std::ifstream cin(fs::path(dir) / "covariance.csv");
    if (cin) {
        std::getline(cin, line);  // header
        Matrix cov(flat.size(), flat.size());
        std::size_t i = 0;
        while (std::getline(cin, line) && i < flat.size()) {
            auto fields = split(line, ',');
            if (fields.size() != flat.size() + 1)
                throw std::runtime_error("covariance.csv is malformed");
            for (std::size_t j = 0; j < flat.size(); ++j)
                cov(i, j) = std::stod(fields[j + 1]);
            ++i;
        }
        if (i != flat.size()) throw std::runtime_error("covariance.csv is truncated");
        stored.fit.covariance = std::move(cov);
    }
    return stored;
}

std::string labels_to_string(const std::map<std::string, std::string>& labels) {
    std::string out;
    for (const auto& [k, v] : labels) {
        if (!out.empty()) out += ',';
        out += k + "=" + v;
    }
    return out;
}

// ----- command option bags -------------------------------------------------

struct CommonIo {
    std::string input;
    std::string schema;
    std::string out = ".";
    double threshold = 100.0;
};

struct FitCmd {
    CommonIo io;
    double level = 0.95;
    int max_iter = 500;
    double grad_tol = 1e-6;
    double step_tol = 1e-9;
    bool allow_nonconverged = false;
};

struct EndpointCmd {
    CommonIo io;
    std::string fit_dir;
    std::string profile;  // empty: per-profile table from --input
    double level = 0.95;
    std::size_t min_frequency = 10;
};

struct ContrastCmd {
    CommonIo io;
    std::string fit_dir;
    std::string base;
    double level = 0.95;
};

struct BootstrapCmd {
    FitCmd fit;
    int replicates = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string profile;  // optional endpoint functional
};

struct QqCmd {
    CommonIo io;
    double grid_step = 0.001;
    std::string profile;
};

struct SweepCmd {
    CommonIo io;
    std::string thresholds = "98,99,100,101,102";
    double level = 0.95;
};

struct SimulateCmd {
    std::string config;
    std::string out = ".";
};

struct SummarizeCmd {
    CommonIo io;
    std::string age_breaks = "90,92,94,96,98,100,102,104,106";
    std::string period_breaks;
    bool have_threshold = false;
};

FitResult run_fit_common(const FitCmd& cmd, const CovariateSchema& schema,
                         const std::vector<IndividualRecord>& records,
                         ExtractResult& extraction) {
    extraction = to_exceedances(records, ModelSpec{cmd.io.threshold, schema});
    if (extraction.data.empty())
        throw std::runtime_error("no exceedances above threshold " +
                                 format_double(cmd.io.threshold));
    FitOptions options;
    options.max_iterations = cmd.max_iter;
    options.grad_tol = cmd.grad_tol;
    options.step_tol = cmd.step_tol;
    options.column_names = schema.column_names();
    options.compute_covariance = false;
    FitResult fit = fit_mle(extraction.data, std::nullopt, options);
    if (!fit.converged && !cmd.allow_nonconverged)
        throw NumericalError(
            "fit did not converge after " + std::to_string(fit.iterations) +
            " iterations (gradient norm " + format_double(fit.gradient_norm) +
            "); rerun with --allow-nonconverged to keep the best point");
    if (fit.converged) fit.covariance = observed_fisher(fit.theta_hat, extraction.data);
    return fit;
}

int cmd_fit(const FitCmd& cmd, Manifest& manifest) {
    const auto dir = ensure_outdir(cmd.io.out);
    auto schema_raw = parse_schema_file(cmd.io.schema);
    auto records = load_records_file(cmd.io.input, schema_raw);
    auto schema = load_resolved_schema(cmd.io.schema, &records);
    manifest.input(cmd.io.input);
    manifest.input(cmd.io.schema);

    ExtractResult extraction;
    FitResult fit = run_fit_common(cmd, schema, records, extraction);
    const auto terms = schema.column_names();
    std::vector<std::string> all_terms = terms;
    all_terms.push_back("xi");

    write_fit_csv(dir / "fit.csv", fit, all_terms, cmd.level);
    manifest.output((dir / "fit.csv").string());
    if (fit.covariance.rows == all_terms.size()) {
        write_covariance_csv(dir / "covariance.csv", fit.covariance, all_terms);
        manifest.output((dir / "covariance.csv").string());
    }
    write_schema(dir / "schema_resolved.txt", schema);
    manifest.output((dir / "schema_resolved.txt").string());

    std::ofstream report(dir / "fit_report.txt");
    report << "lifetail fit\n"
           << "input records:        " << records.size() << "\n"
           << "threshold age:        " << format_double(cmd.io.threshold) << "\n"
           << "exceedances kept:     " << extraction.kept << "\n"
           << "dropped (<= u):       " << extraction.dropped_below_threshold << "\n"
           << "dropped (degenerate): " << extraction.dropped_degenerate << "\n"
           << "converged:            " << (fit.converged ? "yes" : "NO") << "\n"
           << "iterations:           " << fit.iterations << "\n"
           << "log-likelihood:       " << format_double(fit.loglik) << "\n"
           << "gradient max-norm:    " << format_double(fit.gradient_norm) << "\n\n";
    const auto flat = fit.theta_hat.flat();
    for (std::size_t j = 0; j < flat.size(); ++j) {
        report << all_terms[j] << " = " << format_double(flat[j]);
        if (fit.covariance.rows == flat.size())
            report << "  (se " << format_double(std::sqrt(fit.covariance(j, j))) << ")";
        report << "\n";
    }
    if (fit.theta_hat.xi < 0.0) {
        report << "\nimplied maximum lifespan (all-reference profile): "
               << format_double(endpoint(fit.theta_hat,
                                         encode_profile({[&] {
                                                            std::map<std::string, std::string> m;
                                                            for (const auto& c : schema.covariates)
                                                                m[c.name] = c.reference;
                                                            return m;
                                                        }()},
                                                        schema),
                                         cmd.io.threshold))
               << "\n";
    } else {
        report << "\nno finite endpoint (xi >= 0)\n";
    }
    report.close();
    manifest.output((dir / "fit_report.txt").string());
    manifest.write(dir);
    std::cout << "fit written to " << dir.string() << "\n";
    return 0;
}

int cmd_endpoint(const EndpointCmd& cmd, Manifest& manifest) {
    const auto dir = ensure_outdir(cmd.io.out);
    auto stored = read_fit_dir(cmd.fit_dir);
    if (!(stored.fit.theta_hat.xi < 0.0))
        throw NumericalError("no finite endpoint: fitted xi is nonnegative");

    if (!cmd.profile.empty()) {
        auto schema = load_resolved_schema(cmd.io.schema, nullptr);
        const auto labels = parse_labels(cmd.profile);
        const auto row = encode_profile(labels, schema);
        const bool have_cov = stored.fit.covariance.rows == stored.fit.theta_hat.dim();
        std::ofstream out(dir / "endpoints.csv");
        out << "profile,x_star,se,lo,hi,method\n";
        if (have_cov) {
            auto est = endpoint_delta_ci(stored.fit, row, cmd.io.threshold, cmd.level);
            out << labels_to_string(labels) << ',' << format_double(est.x_star) << ','
                << format_double(est.se) << ',' << format_double(est.lo) << ','
                << format_double(est.hi) << ",fisher-delta\n";
        } else {
            const double x = endpoint(stored.fit.theta_hat, row, cmd.io.threshold);
            out << labels_to_string(labels) << ',' << format_double(x) << ",,,,point\n";
        }
    } else {
        if (cmd.io.input.empty())
            throw std::runtime_error("endpoint: need --profile or --input for a table");
        auto schema_raw = parse_schema_file(cmd.io.schema);
        auto records = load_records_file(cmd.io.input, schema_raw);
        auto schema = load_resolved_schema(cmd.io.schema, &records);
        manifest.input(cmd.io.input);
        auto rows = profile_endpoint_table(stored.fit, ModelSpec{cmd.io.threshold, schema},
                                           records, cmd.min_frequency, cmd.level);
        std::ofstream out(dir / "endpoints.csv");
        out << "profile,frequency,x_star,se,lo,hi\n";
        for (const auto& row : rows)
            out << labels_to_string(row.labels) << ',' << row.frequency << ','
                << format_double(row.x_star) << ',' << format_double(row.se) << ','
                << format_double(row.lo) << ',' << format_double(row.hi) << '\n';
    }
    manifest.input(cmd.io.schema);
    manifest.output((dir / "endpoints.csv").string());
    manifest.write(dir);
    std::cout << "endpoints written to " << dir.string() << "\n";
    return 0;
}

int cmd_contrast(const ContrastCmd& cmd, Manifest& manifest) {
    const auto dir = ensure_outdir(cmd.io.out);
    auto stored = read_fit_dir(cmd.fit_dir);
    if (!(stored.fit.theta_hat.xi < 0.0))
        throw NumericalError("no finite endpoint: fitted xi is nonnegative");
    auto schema = load_resolved_schema(cmd.io.schema, nullptr);
    const auto base = parse_labels(cmd.base);
    auto rows = contrast_table(stored.fit, schema, base, cmd.io.threshold, cmd.level);
    std::ofstream out(dir / "contrasts.csv");
    out << "covariate,level,delta,se,lo,hi\n";
    for (const auto& row : rows)
        out << row.covariate << ',' << row.level << ',' << format_double(row.delta) << ','
            << format_double(row.se) << ',' << format_double(row.lo) << ','
            << format_double(row.hi) << '\n';
    manifest.input(cmd.io.schema);
    manifest.output((dir / "contrasts.csv").string());
    manifest.write(dir);
    std::cout << "contrasts written to " << dir.string() << "\n";
    return 0;
}

int cmd_bootstrap(const BootstrapCmd& cmd, Manifest& manifest) {
    const auto dir = ensure_outdir(cmd.fit.io.out);
    auto schema_raw = parse_schema_file(cmd.fit.io.schema);
    auto records = load_records_file(cmd.fit.io.input, schema_raw);
    auto schema = load_resolved_schema(cmd.fit.io.schema, &records);
    manifest.input(cmd.fit.io.input);
    manifest.input(cmd.fit.io.schema);

    ExtractResult extraction;
    FitResult fit = run_fit_common(cmd.fit, schema, records, extraction);

    BootstrapOptions options;
    options.fit.max_iterations = cmd.fit.max_iter;
    options.fit.grad_tol = cmd.fit.grad_tol;
    options.fit.step_tol = cmd.fit.step_tol;
    options.fit.column_names = schema.column_names();
    options.threads = cmd.threads;
    auto run = bootstrap(extraction.data, fit, cmd.replicates, cmd.seed, options);

    std::vector<std::string> terms = schema.column_names();
    terms.push_back("xi");
    std::vector<double> profile_row;
    if (!cmd.profile.empty())
        profile_row = encode_profile(parse_labels(cmd.profile), schema);

    {
        std::ofstream out(dir / "bootstrap_replicates.csv");
        out << "replicate";
        for (const auto& t : terms) out << ',' << t;
        if (!profile_row.empty()) out << ",x_star";
        out << '\n';
        for (std::size_t r = 0; r < run.estimates.size(); ++r) {
            out << r;
            for (double v : run.estimates[r].flat()) out << ',' << format_double(v);
            if (!profile_row.empty())
                out << ','
                    << format_double(endpoint(run.estimates[r], profile_row,
                                              cmd.fit.io.threshold));
            out << '\n';
        }
    }
    manifest.output((dir / "bootstrap_replicates.csv").string());

    {
        std::ofstream out(dir / "bootstrap_ci.csv");
        out << "quantity,lo,hi,method\n";
        for (std::size_t j = 0; j < terms.size(); ++j) {
            auto ci = bootstrap_percentile_ci(
                run, [&](const ParamVector& p) { return p.flat()[j]; }, cmd.fit.level);
            out << terms[j] << ',' << format_double(ci.first) << ','
                << format_double(ci.second) << ",bootstrap-percentile\n";
        }
        if (!profile_row.empty()) {
            auto ci = bootstrap_percentile_ci(
                run,
                [&](const ParamVector& p) {
                    return endpoint(p, profile_row, cmd.fit.io.threshold);
                },
                cmd.fit.level);
            out << "x_star," << format_double(ci.first) << ',' << format_double(ci.second)
                << ",bootstrap-percentile\n";
        }
    }
    manifest.output((dir / "bootstrap_ci.csv").string());

    std::ofstream report(dir / "bootstrap_report.txt");
    report << "lifetail bootstrap\n"
           << "replicates requested: " << run.replicates << "\n"
           << "replicates stored:    " << run.estimates.size() << "\n"
           << "failures:             " << run.failures << (run.flagged ? "  (FLAGGED)" : "")
           << "\nseed:                 " << run.seed << "\n";
    if (fit.covariance.rows == terms.size()) {
        auto wald = wald_intervals(fit, cmd.fit.level);
        auto ci = bootstrap_percentile_ci(
            run, [](const ParamVector& p) { return p.xi; }, cmd.fit.level);
        report << "\nxi intervals at level " << cmd.fit.level << ":\n"
               << "  wald:       [" << format_double(wald.back().first) << ", "
               << format_double(wald.back().second) << "]\n"
               << "  percentile: [" << format_double(ci.first) << ", "
               << format_double(ci.second) << "]\n";
    }
    report.close();
    manifest.output((dir / "bootstrap_report.txt").string());
    manifest.write(dir);
    std::cout << "bootstrap written to " << dir.string() << "\n";
    return run.flagged ? 2 : 0;
}

int cmd_qq(const QqCmd& cmd, Manifest& manifest) {
    const auto dir = ensure_outdir(cmd.io.out);
    auto schema_raw = parse_schema_file(cmd.io.schema);
    auto records = load_records_file(cmd.io.input, schema_raw);
    auto schema = load_resolved_schema(cmd.io.schema, &records);
    manifest.input(cmd.io.input);
    manifest.input(cmd.io.schema);

    FitCmd fit_cmd;
    fit_cmd.io = cmd.io;
    ExtractResult extraction;
    FitResult fit = run_fit_common(fit_cmd, schema, records, extraction);

    std::vector<double> probs;
    for (double p = cmd.grid_step; p < 1.0 - cmd.grid_step / 2.0; p += cmd.grid_step)
        probs.push_back(p);

    QqGrid grid;
    if (!cmd.profile.empty()) {
        const auto row = encode_profile(parse_labels(cmd.profile), schema);
        grid = qq_grid(fit, extraction.data, probs, &row);
    } else {
        grid = qq_grid(fit, extraction.data, probs);
    }

    std::ofstream out(dir / "qq.csv");
    out << "prob,theoretical,empirical\n";
    for (std::size_t i = 0; i < grid.probs.size(); ++i)
        out << format_double(grid.probs[i]) << ',' << format_double(grid.theoretical[i])
            << ',' << format_double(grid.empirical[i]) << '\n';
    out.close();
    manifest.output((dir / "qq.csv").string());

    std::ofstream report(dir / "qq_report.txt");
    report << "lifetail qq\n"
           << "deaths used:  " << grid.n_deaths << "\n"
           << "pooled scale: " << format_double(grid.pooled_sigma) << "\n"
           << "xi:           " << format_double(fit.theta_hat.xi) << "\n";
    if (grid.low_death_warning)
        report << "WARNING: fewer than 100 observed deaths; empirical quantiles are "
                  "unstable\n";
    report << "note: censored records are excluded from the empirical column\n";
    report.close();
    manifest.output((dir / "qq_report.txt").string());
    manifest.write(dir);
    std::cout << "qq grid written to " << dir.string() << "\n";
    return 0;
}

int cmd_sweep(const SweepCmd& cmd, Manifest& manifest) {
    const auto dir = ensure_outdir(cmd.io.out);
    auto schema_raw = parse_schema_file(cmd.io.schema);
    auto records = load_records_file(cmd.io.input, schema_raw);
    auto schema = load_resolved_schema(cmd.io.schema, &records);
    manifest.input(cmd.io.input);
    manifest.input(cmd.io.schema);

    const auto thresholds = parse_number_list(cmd.thresholds);
    auto rows = threshold_sweep(records, schema, thresholds, FitOptions{}, cmd.level);

    const auto terms = schema.column_names();
    std::ofstream out(dir / "sweep.csv");
    out << "u,n_exceedances,converged,xi_hat,xi_lo,xi_hi";
    for (const auto& t : terms) out << ',' << t << ',' << t << "_lo," << t << "_hi";
    out << ",error\n";
    for (const auto& row : rows) {
        out << format_double(row.u) << ',' << row.n_exceedances << ','
            << (row.converged ? 1 : 0) << ',' << format_double(row.xi_hat) << ','
            << format_double(row.xi_lo) << ',' << format_double(row.xi_hi);
        for (std::size_t j = 0; j < terms.size(); ++j) {
            if (j < row.beta_hat.size()) {
                out << ',' << format_double(row.beta_hat[j]);
                out << ',' << (j < row.beta_lo.size() ? format_double(row.beta_lo[j]) : "");
                out << ',' << (j < row.beta_hi.size() ? format_double(row.beta_hi[j]) : "");
            } else {
                out << ",,,";
            }
        }
        out << ',' << row.error << '\n';
    }
    out.close();
    manifest.output((dir / "sweep.csv").string());
    manifest.write(dir);
    std::cout << "sweep written to " << dir.string() << "\n";
    return 0;
}

int cmd_simulate(const SimulateCmd& cmd, Manifest& manifest) {
    const auto dir = ensure_outdir(cmd.out);
    auto cfg = parse_scenario_file(cmd.config);
    manifest.input(cmd.config);
    auto records = simulate_population(cfg);
    {
        std::ofstream out(dir / "population.csv");
        write_records(out, records, cfg.schema);
    }
    write_truth_file((dir / "truth.txt").string(), cfg);
    manifest.output((dir / "population.csv").string());
    manifest.output((dir / "truth.txt").string());
    manifest.write(dir);
    std::cout << records.size() << " records written to " << dir.string() << "\n";
    return 0;
}

int cmd_summarize(const SummarizeCmd& cmd, Manifest& manifest) {
    const auto dir = ensure_outdir(cmd.io.out);
    auto schema_raw = parse_schema_file(cmd.io.schema);
    auto records = load_records_file(cmd.io.input, schema_raw);
    manifest.input(cmd.io.input);
    manifest.input(cmd.io.schema);

    std::vector<int> period_breaks;
    if (!cmd.period_breaks.empty())
        for (double v : parse_number_list(cmd.period_breaks))
            period_breaks.push_back(static_cast<int>(v));
    auto table =
        contingency_summary(records, parse_number_list(cmd.age_breaks), period_breaks);

    std::ofstream out(dir / "summary.csv");
    out << "age_band,period,count\n";
    for (std::size_t i = 0; i < table.age_bands.size(); ++i)
        for (std::size_t j = 0; j < table.period_bands.size(); ++j)
            out << table.age_bands[i] << ',' << table.period_bands[j] << ','
                << table.counts[i][j] << '\n';
    out.close();
    manifest.output((dir / "summary.csv").string());

    std::ofstream report(dir / "summary_report.txt");
    report << "lifetail summarize\n"
           << "records: " << table.total << "\n\nage band totals:\n";
    for (std::size_t i = 0; i < table.age_bands.size(); ++i)
        report << "  " << table.age_bands[i] << ": " << table.age_totals[i] << "\n";
    report << "\nperiod totals:\n";
    for (std::size_t j = 0; j < table.period_bands.size(); ++j)
        report << "  " << table.period_bands[j] << ": " << table.period_totals[j] << "\n";
    if (cmd.have_threshold) {
        auto schema = load_resolved_schema(cmd.io.schema, &records);
        auto extraction = to_exceedances(records, ModelSpec{cmd.io.threshold, schema});
        report << "\nat threshold " << format_double(cmd.io.threshold) << ": "
               << extraction.kept << " exceedances, " << extraction.dropped_below_threshold
               << " at/below threshold, " << extraction.dropped_degenerate
               << " degenerate\n";
    }
    report.close();
    manifest.output((dir / "summary_report.txt").string());
    manifest.write(dir);
    std::cout << "summary written to " << dir.string() << "\n";
    return 0;
}

void add_common(CLI::App* app, CommonIo& io, bool need_threshold = true) {
    app->add_option("--input", io.input, "input CSV of individual records")->required();
    app->add_option("--schema", io.schema, "covariate schema file")->required();
    app->add_option("--out", io.out, "output directory (default .)");
    if (need_threshold)
        app->add_option("--threshold", io.threshold, "threshold age u")->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lifetail: covariate-dependent generalized Pareto models for "
                 "maximum-lifespan estimation under truncation and censoring"};
    app.set_version_flag("--version", std::string("lifetail ") + kVersion);
    app.require_subcommand(1);

    FitCmd fit_cmd;
    auto* fit_app = app.add_subcommand("fit", "maximum likelihood fit");
    add_common(fit_app, fit_cmd.io);
    fit_app->add_option("--level", fit_cmd.level, "confidence level (default 0.95)");
    fit_app->add_option("--max-iter", fit_cmd.max_iter, "optimizer iteration cap");
    fit_app->add_option("--grad-tol", fit_cmd.grad_tol, "gradient tolerance");
    fit_app->add_option("--step-tol", fit_cmd.step_tol, "relative step tolerance");
    fit_app->add_flag("--allow-nonconverged", fit_cmd.allow_nonconverged,
                      "write results even without convergence");

    EndpointCmd ep_cmd;
    auto* ep_app = app.add_subcommand("endpoint", "maximum lifespan per profile");
    ep_app->add_option("--fit", ep_cmd.fit_dir, "directory with fit.csv/covariance.csv")
        ->required();
    ep_app->add_option("--schema", ep_cmd.io.schema, "covariate schema file")->required();
    ep_app->add_option("--threshold", ep_cmd.io.threshold, "threshold age u")->required();
    ep_app->add_option("--out", ep_cmd.io.out, "output directory");
    ep_app->add_option("--profile", ep_cmd.profile, "single profile cov=label,...");
    ep_app->add_option("--input", ep_cmd.io.input, "records for the per-profile table");
    ep_app->add_option("--level", ep_cmd.level, "confidence level");
    ep_app->add_option("--min-frequency", ep_cmd.min_frequency,
                       "report only profiles observed strictly more often than this");

    ContrastCmd ct_cmd;
    auto* ct_app = app.add_subcommand("contrast", "lifespan change per characteristic");
    ct_app->add_option("--fit", ct_cmd.fit_dir, "directory with fit.csv/covariance.csv")
        ->required();
    ct_app->add_option("--schema", ct_cmd.io.schema, "covariate schema file")->required();
    ct_app->add_option("--threshold", ct_cmd.io.threshold, "threshold age u")->required();
    ct_app->add_option("--out", ct_cmd.io.out, "output directory");
    ct_app->add_option("--base", ct_cmd.base, "base profile cov=label,...")->required();
    ct_app->add_option("--level", ct_cmd.level, "confidence level");

    BootstrapCmd bs_cmd;
    auto* bs_app = app.add_subcommand("bootstrap", "non-parametric bootstrap");
    add_common(bs_app, bs_cmd.fit.io);
    bs_app->add_option("--B,--replicates", bs_cmd.replicates, "bootstrap replicates");
    bs_app->add_option("--seed", bs_cmd.seed, "random seed (default 1)");
    bs_app->add_option("--threads", bs_cmd.threads, "worker threads (default 1)");
    bs_app->add_option("--level", bs_cmd.fit.level, "confidence level");
    bs_app->add_option("--profile", bs_cmd.profile,
                       "also track the endpoint of this profile");
    bs_app->add_option("--max-iter", bs_cmd.fit.max_iter, "optimizer iteration cap");

    QqCmd qq_cmd;
    auto* qq_app = app.add_subcommand("qq", "quantile-quantile fit assessment");
    add_common(qq_app, qq_cmd.io);
    qq_app->add_option("--grid-step", qq_cmd.grid_step,
                       "probability grid step (default 0.001)");
    qq_app->add_option("--profile", qq_cmd.profile, "restrict to one profile");

    SweepCmd sw_cmd;
    auto* sw_app = app.add_subcommand("sweep", "threshold sensitivity sweep");
    add_common(sw_app, sw_cmd.io, /*need_threshold=*/false);
    sw_app->add_option("--thresholds", sw_cmd.thresholds,
                       "comma-separated threshold ages (default 98..102)");
    sw_app->add_option("--level", sw_cmd.level, "confidence level");

    SimulateCmd sim_cmd;
    auto* sim_app = app.add_subcommand("simulate", "generate a synthetic population");
    sim_app->add_option("--config", sim_cmd.config, "scenario file")->required();
    sim_app->add_option("--out", sim_cmd.out, "output directory");

    SummarizeCmd sum_cmd;
    auto* sum_app = app.add_subcommand("summarize", "descriptive contingency summary");
    add_common(sum_app, sum_cmd.io, /*need_threshold=*/false);
    auto* thr = sum_app->add_option("--threshold", sum_cmd.io.threshold,
                                    "also report exceedance counts at this age");
    sum_app->add_option("--age-breaks", sum_cmd.age_breaks, "age band breaks");
    sum_app->add_option("--period-breaks", sum_cmd.period_breaks, "period breaks");

    CLI11_PARSE(app, argc, argv);
    sum_cmd.have_threshold = thr->count() > 0;

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (fit_app->parsed()) {
            Manifest manifest("fit", args);
            return cmd_fit(fit_cmd, manifest);
        }
        if (ep_app->parsed()) {
            Manifest manifest("endpoint", args);
            return cmd_endpoint(ep_cmd, manifest);
        }
        if (ct_app->parsed()) {
            Manifest manifest("contrast", args);
            return cmd_contrast(ct_cmd, manifest);
        }
        if (bs_app->parsed()) {
            Manifest manifest("bootstrap", args);
            return cmd_bootstrap(bs_cmd, manifest);
        }
        if (qq_app->parsed()) {
            Manifest manifest("qq", args);
            return cmd_qq(qq_cmd, manifest);
        }
        if (sw_app->parsed()) {
            Manifest manifest("sweep", args);
            return cmd_sweep(sw_cmd, manifest);
        }
        if (sim_app->parsed()) {
            Manifest manifest("simulate", args);
            return cmd_simulate(sim_cmd, manifest);
        }
        if (sum_app->parsed()) {
            Manifest manifest("summarize", args);
            return cmd_summarize(sum_cmd, manifest);
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
