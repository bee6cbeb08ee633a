#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lifetail/design.hpp"
#include "lifetail/diagnostics.hpp"
#include "lifetail/fit.hpp"
#include "lifetail/gpd.hpp"
#include "lifetail/inference.hpp"
#include "lifetail/likelihood.hpp"
#include "lifetail/rng.hpp"
#include "lifetail/simulate.hpp"

namespace py = pybind11;
using namespace lifetail;

namespace {

CovariateSchema schema_from_text(const std::string& text) {
    std::istringstream in(text);
    return parse_schema(in);
}

std::vector<double> sample_truncated_batch(double entry, double sigma, double xi,
                                           std::size_t n, std::uint64_t seed) {
    auto rng = substream(seed, stream_tag::simulate);
    gpd::Params params(sigma, xi);
    std::vector<double> out(n);
    for (auto& v : out) v = gpd::sample_truncated(entry, params, rng);
    return out;
}

std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) rows[i][j] = m(i, j);
    return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Generalized Pareto threshold-exceedance models with covariate-"
              "dependent scale, under left truncation and right censoring";
    m.attr("__version__") = "0.1.0";

    // ---- distribution kernel
    auto gpd_mod = m.def_submodule("gpd", "generalized Pareto kernel");
    gpd_mod.def(
        "survival",
        [](double y, double sigma, double xi) {
            return gpd::survival(y, gpd::Params(sigma, xi));
        },
        py::arg("y"), py::arg("sigma"), py::arg("xi"));
    gpd_mod.def(
        "density",
        [](double y, double sigma, double xi) {
            return gpd::density(y, gpd::Params(sigma, xi));
        },
        py::arg("y"), py::arg("sigma"), py::arg("xi"));
    gpd_mod.def(
        "cdf",
        [](double y, double sigma, double xi) {
            return gpd::cdf(y, gpd::Params(sigma, xi));
        },
        py::arg("y"), py::arg("sigma"), py::arg("xi"));
    gpd_mod.def(
        "quantile",
        [](double prob, double sigma, double xi) {
            return gpd::quantile(prob, gpd::Params(sigma, xi));
        },
        py::arg("prob"), py::arg("sigma"), py::arg("xi"));
    gpd_mod.def("sample_truncated", &sample_truncated_batch, py::arg("entry"),
                py::arg("sigma"), py::arg("xi"), py::arg("n"), py::arg("seed"),
                "n inverse-transform draws conditional on exceeding entry");

    // ---- design
    py::class_<Covariate>(m, "Covariate")
        .def_readonly("name", &Covariate::name)
        .def_readonly("categories", &Covariate::categories)
        .def_readonly("reference", &Covariate::reference);

    py::class_<CovariateSchema>(m, "CovariateSchema")
        .def_readonly("covariates", &CovariateSchema::covariates)
        .def("resolved", &CovariateSchema::resolved)
        .def("design_dim", &CovariateSchema::design_dim)
        .def("column_names", &CovariateSchema::column_names);

    m.def("schema_from_text", &schema_from_text, py::arg("text"),
          "parse a schema from 'name = cat1,cat2*,cat3' lines");
    m.def("schema_from_file", &parse_schema_file, py::arg("path"));

    py::class_<IndividualRecord>(m, "IndividualRecord")
        .def(py::init([](double entry_age, double exit_age, bool event,
                         std::map<std::string, std::string> covariates) {
                 return IndividualRecord{entry_age, exit_age, event,
                                         std::move(covariates)};
             }),
             py::arg("entry_age"), py::arg("exit_age"), py::arg("event"),
             py::arg("covariates") = std::map<std::string, std::string>{})
        .def_readwrite("entry_age", &IndividualRecord::entry_age)
        .def_readwrite("exit_age", &IndividualRecord::exit_age)
        .def_readwrite("event", &IndividualRecord::event)
        .def_readwrite("covariates", &IndividualRecord::covariates);

    py::class_<Exceedance>(m, "Exceedance")
        .def_readonly("y", &Exceedance::y)
        .def_readonly("a", &Exceedance::a)
        .def_readonly("event", &Exceedance::event)
        .def_readonly("design_row", &Exceedance::design_row);

    py::class_<ExtractResult>(m, "ExtractResult")
        .def_readonly("data", &ExtractResult::data)
        .def_readonly("kept", &ExtractResult::kept)
        .def_readonly("dropped_below_threshold", &ExtractResult::dropped_below_threshold)
        .def_readonly("dropped_degenerate", &ExtractResult::dropped_degenerate);

    m.def("load_records", &load_records_file, py::arg("path"), py::arg("schema"));
    m.def(
        "to_exceedances",
        [](const std::vector<IndividualRecord>& records, double threshold,
           const CovariateSchema& schema) {
            return to_exceedances(records, ModelSpec{threshold, schema});
        },
        py::arg("records"), py::arg("threshold"), py::arg("schema"));
    m.def("encode_profile", &encode_profile, py::arg("labels"), py::arg("schema"));
    m.def("decode_profile", &decode_profile, py::arg("row"), py::arg("schema"));
    m.def("resolve_references", &resolve_references, py::arg("schema"),
          py::arg("records"));

    // ---- likelihood and fitting
    py::class_<ParamVector>(m, "ParamVector")
        .def(py::init([](std::vector<double> beta, double xi) {
                 return ParamVector{std::move(beta), xi};
             }),
             py::arg("beta"), py::arg("xi"))
        .def_readwrite("beta", &ParamVector::beta)
        .def_readwrite("xi", &ParamVector::xi);

    m.def(
        "log_likelihood",
        [](const ParamVector& theta, const std::vector<Exceedance>& data) {
            return log_likelihood(theta, data);
        },
        py::arg("theta"), py::arg("data"));
    m.def(
        "gradient",
        [](const ParamVector& theta, const std::vector<Exceedance>& data) {
            return gradient(theta, data);
        },
        py::arg("theta"), py::arg("data"));
    m.def(
        "feasible",
        [](const ParamVector& theta, const std::vector<Exceedance>& data) {
            return feasible(theta, data);
        },
        py::arg("theta"), py::arg("data"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("theta_hat", &FitResult::theta_hat)
        .def_readonly("loglik", &FitResult::loglik)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("gradient_norm", &FitResult::gradient_norm)
        .def_property_readonly("covariance", [](const FitResult& r) {
            return matrix_to_rows(r.covariance);
        });

    m.def(
        "fit_mle",
        [](const std::vector<Exceedance>& data, std::optional<ParamVector> init,
           int max_iterations, double grad_tol, double step_tol, bool compute_covariance,
           std::vector<std::string> column_names) {
            FitOptions options;
            options.max_iterations = max_iterations;
            options.grad_tol = grad_tol;
            options.step_tol = step_tol;
            options.compute_covariance = compute_covariance;
            options.column_names = std::move(column_names);
            return fit_mle(data, std::move(init), options);
        },
        py::arg("data"), py::arg("init") = std::nullopt, py::arg("max_iterations") = 500,
        py::arg("grad_tol") = 1e-6, py::arg("step_tol") = 1e-9,
        py::arg("compute_covariance") = true,
        py::arg("column_names") = std::vector<std::string>{});
    m.def(
        "wald_intervals",
        [](const FitResult& result, double level) { return wald_intervals(result, level); },
        py::arg("result"), py::arg("level") = 0.95);

    // ---- inference
    m.def(
        "endpoint",
        [](const ParamVector& theta, const std::vector<double>& profile, double u) {
            return endpoint(theta, profile, u);
        },
        py::arg("theta"), py::arg("profile"), py::arg("u"));

    py::class_<EndpointEstimate>(m, "EndpointEstimate")
        .def_readonly("x_star", &EndpointEstimate::x_star)
        .def_readonly("se", &EndpointEstimate::se)
        .def_readonly("lo", &EndpointEstimate::lo)
        .def_readonly("hi", &EndpointEstimate::hi)
        .def_readonly("method", &EndpointEstimate::method);

    m.def(
        "endpoint_delta_ci",
        [](const FitResult& result, const std::vector<double>& profile, double u,
           double level) { return endpoint_delta_ci(result, profile, u, level); },
        py::arg("result"), py::arg("profile"), py::arg("u"), py::arg("level") = 0.95);

    py::class_<ContrastRow>(m, "ContrastRow")
        .def_readonly("covariate", &ContrastRow::covariate)
        .def_readonly("level", &ContrastRow::level)
        .def_readonly("delta", &ContrastRow::delta)
        .def_readonly("se", &ContrastRow::se)
        .def_readonly("lo", &ContrastRow::lo)
        .def_readonly("hi", &ContrastRow::hi);

    m.def("contrast_table", &contrast_table, py::arg("result"), py::arg("schema"),
          py::arg("base"), py::arg("u"), py::arg("level") = 0.95);

    py::class_<BootstrapRun>(m, "BootstrapRun")
        .def_readonly("replicates", &BootstrapRun::replicates)
        .def_readonly("seed", &BootstrapRun::seed)
        .def_readonly("estimates", &BootstrapRun::estimates)
        .def_readonly("failures", &BootstrapRun::failures)
        .def_readonly("flagged", &BootstrapRun::flagged);

    m.def(
        "bootstrap",
        [](const std::vector<Exceedance>& data, const FitResult& original, int replicates,
           std::uint64_t seed, int threads) {
            BootstrapOptions options;
            options.threads = threads;
            return bootstrap(data, original, replicates, seed, options);
        },
        py::arg("data"), py::arg("original"), py::arg("replicates"), py::arg("seed"),
        py::arg("threads") = 1);
    m.def("bootstrap_percentile_ci", &bootstrap_percentile_ci, py::arg("run"),
          py::arg("functional"), py::arg("level") = 0.95);

    // ---- simulation
    py::class_<ProfileWeight>(m, "ProfileWeight")
        .def(py::init([](std::map<std::string, std::string> labels, double weight) {
                 return ProfileWeight{std::move(labels), weight};
             }),
             py::arg("labels"), py::arg("weight"))
        .def_readwrite("labels", &ProfileWeight::labels)
        .def_readwrite("weight", &ProfileWeight::weight);

    py::enum_<EntryDist>(m, "EntryDist")
        .value("FIXED_AT_THRESHOLD", EntryDist::FixedAtThreshold)
        .value("UNIFORM", EntryDist::Uniform);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("true_beta", &ScenarioConfig::true_beta)
        .def_readwrite("true_xi", &ScenarioConfig::true_xi)
        .def_readwrite("threshold_u", &ScenarioConfig::threshold_u)
        .def_readwrite("n_individuals", &ScenarioConfig::n_individuals)
        .def_readwrite("schema", &ScenarioConfig::schema)
        .def_readwrite("profiles", &ScenarioConfig::profiles)
        .def_readwrite("entry", &ScenarioConfig::entry)
        .def_readwrite("entry_max", &ScenarioConfig::entry_max)
        .def_readwrite("censor_age", &ScenarioConfig::censor_age)
        .def_readwrite("random_censor_prob", &ScenarioConfig::random_censor_prob)
        .def_readwrite("seed", &ScenarioConfig::seed);

    m.def("simulate_population", &simulate_population, py::arg("config"));

    // ---- diagnostics
    py::class_<QqGrid>(m, "QqGrid")
        .def_readonly("probs", &QqGrid::probs)
        .def_readonly("theoretical", &QqGrid::theoretical)
        .def_readonly("empirical", &QqGrid::empirical)
        .def_readonly("pooled_sigma", &QqGrid::pooled_sigma)
        .def_readonly("n_deaths", &QqGrid::n_deaths)
        .def_readonly("low_death_warning", &QqGrid::low_death_warning);

    m.def(
        "qq_grid",
        [](const FitResult& result, const std::vector<Exceedance>& data,
           std::vector<double> probs, std::optional<std::vector<double>> profile) {
            return qq_grid(result, data, std::move(probs),
                           profile ? &*profile : nullptr);
        },
        py::arg("result"), py::arg("data"), py::arg("probs") = std::vector<double>{},
        py::arg("profile") = std::nullopt);

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("u", &SweepRow::u)
        .def_readonly("n_exceedances", &SweepRow::n_exceedances)
        .def_readonly("converged", &SweepRow::converged)
        .def_readonly("xi_hat", &SweepRow::xi_hat)
        .def_readonly("xi_lo", &SweepRow::xi_lo)
        .def_readonly("xi_hi", &SweepRow::xi_hi)
        .def_readonly("beta_hat", &SweepRow::beta_hat)
        .def_readonly("beta_lo", &SweepRow::beta_lo)
        .def_readonly("beta_hi", &SweepRow::beta_hi)
        .def_readonly("error", &SweepRow::error);

    m.def("threshold_sweep", &threshold_sweep, py::arg("records"), py::arg("schema"),
          py::arg("thresholds"), py::arg("options") = FitOptions{},
          py::arg("level") = 0.95);

    py::class_<FitOptions>(m, "FitOptions")
        .def(py::init<>())
        .def_readwrite("max_iterations", &FitOptions::max_iterations)
        .def_readwrite("grad_tol", &FitOptions::grad_tol)
        .def_readwrite("step_tol", &FitOptions::step_tol)
        .def_readwrite("compute_covariance", &FitOptions::compute_covariance)
        .def_readwrite("column_names", &FitOptions::column_names);

    py::class_<ProfileEndpointRow>(m, "ProfileEndpointRow")
        .def_readonly("labels", &ProfileEndpointRow::labels)
        .def_readonly("frequency", &ProfileEndpointRow::frequency)
        .def_readonly("x_star", &ProfileEndpointRow::x_star)
        .def_readonly("se", &ProfileEndpointRow::se)
        .def_readonly("lo", &ProfileEndpointRow::lo)
        .def_readonly("hi", &ProfileEndpointRow::hi);

    m.def(
        "profile_endpoint_table",
        [](const FitResult& result, double threshold, const CovariateSchema& schema,
           const std::vector<IndividualRecord>& records, std::size_t min_frequency,
           double level) {
            return profile_endpoint_table(result, ModelSpec{threshold, schema}, records,
                                          min_frequency, level);
        },
        py::arg("result"), py::arg("threshold"), py::arg("schema"), py::arg("records"),
        py::arg("min_frequency") = 10, py::arg("level") = 0.95);
}
