#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "lifetail/io_util.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(LIFETAIL_BIN) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() /
              ("lifetail_cli_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter()));
        fs::create_directories(dir);
        std::ofstream schema(dir / "schema.txt");
        schema << "sex = female*,male\nhht = collective*,single\n";
        std::ofstream scenario(dir / "scenario.txt");
        scenario << "seed = 12\nn = 6000\nthreshold = 98\nxi = -0.13\n"
                 << "beta = 0.955 -0.2 0.28\ncensor_age = 1000\nentry = fixed\n"
                 << "schema_file = schema.txt\n"
                 << "profile = 0.4 sex=female hht=collective\n"
                 << "profile = 0.3 sex=female hht=single\n"
                 << "profile = 0.2 sex=male hht=collective\n"
                 << "profile = 0.1 sex=male hht=single\n";
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const std::string& rel) const { return (dir / rel).string(); }
    static int counter() {
        static int c = 0;
        return ++c;
    }
};

}  // namespace

TEST_CASE("simulate then fit recovers the generating parameters") {
    Workspace ws;
    REQUIRE(run("simulate --config " + ws.path("scenario.txt") + " --out " +
                ws.path("sim")) == 0);
    CHECK(fs::exists(ws.path("sim/population.csv")));
    CHECK(fs::exists(ws.path("sim/truth.txt")));
    CHECK(fs::exists(ws.path("sim/run.manifest")));

    REQUIRE(run("fit --input " + ws.path("sim/population.csv") + " --schema " +
                ws.path("schema.txt") + " --threshold 98 --out " + ws.path("fit")) == 0);

    // parse fit.csv and compare against the truth file within 3 se
    std::ifstream in(ws.path("fit/fit.csv"));
    std::string line;
    std::getline(in, line);
    std::vector<double> est, se;
    while (std::getline(in, line)) {
        auto fields = lifetail::split(line, ',');
        est.push_back(std::stod(fields[1]));
        se.push_back(std::stod(fields[2]));
    }
    REQUIRE(est.size() == 4);
    const std::vector<double> truth = {0.955, -0.2, 0.28, -0.13};
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(std::abs(est[j] - truth[j]) < 3.0 * se[j]);
}

TEST_CASE("manifest args rerun byte-identically") {
    Workspace ws;
    REQUIRE(run("simulate --config " + ws.path("scenario.txt") + " --out " +
                ws.path("sim")) == 0);
    const std::string fit_args = "fit --input " + ws.path("sim/population.csv") +
                                 " --schema " + ws.path("schema.txt") +
                                 " --threshold 98 --out " + ws.path("fit");
    REQUIRE(run(fit_args) == 0);
    const std::string first_fit = slurp(ws.path("fit/fit.csv"));
    const std::string first_cov = slurp(ws.path("fit/covariance.csv"));

    // re-execute exactly what the manifest recorded
    std::string recorded;
    for (const auto& [k, v] : lifetail::read_key_values(ws.path("fit/run.manifest")))
        if (k == "args") recorded = v;
    REQUIRE(recorded == fit_args);
    REQUIRE(run(recorded) == 0);
    CHECK(slurp(ws.path("fit/fit.csv")) == first_fit);
    CHECK(slurp(ws.path("fit/covariance.csv")) == first_cov);

    // simulate twice -> identical population bytes
    REQUIRE(run("simulate --config " + ws.path("scenario.txt") + " --out " +
                ws.path("sim2")) == 0);
    CHECK(slurp(ws.path("sim/population.csv")) == slurp(ws.path("sim2/population.csv")));
}

TEST_CASE("sweep emits one row per threshold") {
    Workspace ws;
    REQUIRE(run("simulate --config " + ws.path("scenario.txt") + " --out " +
                ws.path("sim")) == 0);
    REQUIRE(run("sweep --input " + ws.path("sim/population.csv") + " --schema " +
                ws.path("schema.txt") + " --thresholds 98,99,100,101,102 --out " +
                ws.path("sweep")) == 0);
    CHECK(line_count(ws.path("sweep/sweep.csv")) == 6);  // header + 5 rows
}

TEST_CASE("endpoint and contrast run from stored fits") {
    Workspace ws;
    REQUIRE(run("simulate --config " + ws.path("scenario.txt") + " --out " +
                ws.path("sim")) == 0);
    REQUIRE(run("fit --input " + ws.path("sim/population.csv") + " --schema " +
                ws.path("schema.txt") + " --threshold 98 --out " + ws.path("fit")) == 0);
    REQUIRE(run("endpoint --fit " + ws.path("fit") + " --schema " + ws.path("schema.txt") +
                " --threshold 98 --profile sex=female,hht=single --out " +
                ws.path("ep")) == 0);
    CHECK(line_count(ws.path("ep/endpoints.csv")) == 2);
    REQUIRE(run("endpoint --fit " + ws.path("fit") + " --schema " + ws.path("schema.txt") +
                " --threshold 98 --input " + ws.path("sim/population.csv") +
                " --min-frequency 10 --out " + ws.path("ept")) == 0);
    CHECK(line_count(ws.path("ept/endpoints.csv")) == 5);  // header + 4 profiles
    REQUIRE(run("contrast --fit " + ws.path("fit") + " --schema " + ws.path("schema.txt") +
                " --threshold 98 --base sex=male,hht=collective --out " +
                ws.path("ct")) == 0);
    CHECK(line_count(ws.path("ct/contrasts.csv")) == 3);  // header + 2 swaps
}

TEST_CASE("bootstrap runs are deterministic across thread counts") {
    Workspace ws;
    REQUIRE(run("simulate --config " + ws.path("scenario.txt") + " --out " +
                ws.path("sim")) == 0);
    const std::string common = "bootstrap --input " + ws.path("sim/population.csv") +
                               " --schema " + ws.path("schema.txt") +
                               " --threshold 98 --B 150 --seed 5 ";
    REQUIRE(run(common + "--out " + ws.path("b1")) == 0);
    REQUIRE(run(common + "--threads 2 --out " + ws.path("b2")) == 0);
    CHECK(slurp(ws.path("b1/bootstrap_replicates.csv")) ==
          slurp(ws.path("b2/bootstrap_replicates.csv")));
    CHECK(slurp(ws.path("b1/bootstrap_ci.csv")) == slurp(ws.path("b2/bootstrap_ci.csv")));
}

TEST_CASE("exit codes distinguish validation from numerical failures") {
    Workspace ws;
    // missing file -> validation error
    CHECK(run("fit --input " + ws.path("nope.csv") + " --schema " + ws.path("schema.txt") +
              " --threshold 98 --out " + ws.path("x")) == 1);
    // bad flags -> CLI parse error (106 from CLI11 maps to nonzero)
    CHECK(run("fit") != 0);

    REQUIRE(run("simulate --config " + ws.path("scenario.txt") + " --out " +
                ws.path("sim")) == 0);
    // forced non-convergence without the escape hatch -> 2, with it -> 0
    const std::string tight = "fit --input " + ws.path("sim/population.csv") +
                              " --schema " + ws.path("schema.txt") +
                              " --threshold 98 --max-iter 1 --grad-tol 1e-12 --out " +
                              ws.path("nc");
    CHECK(run(tight) == 2);
    CHECK(run(tight + " --allow-nonconverged") == 0);
}

TEST_CASE("summarize writes the contingency table") {
    Workspace ws;
    REQUIRE(run("simulate --config " + ws.path("scenario.txt") + " --out " +
                ws.path("sim")) == 0);
    REQUIRE(run("summarize --input " + ws.path("sim/population.csv") + " --schema " +
                ws.path("schema.txt") + " --age-breaks 98,100,102,104 --threshold 100 "
                "--out " + ws.path("sum")) == 0);
    CHECK(fs::exists(ws.path("sum/summary.csv")));
    CHECK(fs::exists(ws.path("sum/summary_report.txt")));
    // 5 age bands x 1 period + header
    CHECK(line_count(ws.path("sum/summary.csv")) == 6);
}
