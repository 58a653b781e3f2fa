#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "benchmark.hpp"
#include "cli.hpp"

using namespace funcause;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("funcause_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "funcause");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("simulate") {
    TempDir dir("simulate");
    REQUIRE(run({"simulate", "--n", "50", "--T", "100", "--seed", "4", "--out", dir / "a.csv"}).code == 0);
    REQUIRE(run({"simulate", "--n", "50", "--T", "100", "--seed", "4", "--out", dir / "b.csv"}).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    const Dataset ds = load_dataset(dir / "a.csv");
    CHECK(ds.size() == 50);
    CHECK(ds.outcome_grid().size() == 100);
    const auto truth = nlohmann::json::parse(slurp(dir / "a_truth.json"));
    CHECK(truth["effect"].size() == 100);
    CHECK(truth["schema_version"] == kSchemaVersion);

    const Run bad = run({"simulate", "--scenario", "sideways", "--out", dir / "c.csv"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("sideways") != std::string::npos);
    CHECK(run({"simulate", "--T", "4", "--out", dir / "c.csv"}).code == 1);
    CHECK(run({}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("estimate") {
    TempDir dir("estimate");
    REQUIRE(run({"simulate", "--n", "60", "--T", "30", "--seed", "2", "--confounding", "0", "--covariate-dim", "0",
                 "--out", dir / "d.json"})
                .code == 0);
    const Run r = run({"estimate", "--data", dir / "d.json", "--estimator", "frechet-euclid"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["schema_version"] == kSchemaVersion);
    CHECK(j.contains("runtime_seconds"));
    CHECK_FALSE(j.contains("ci"));

    const Dataset ds = load_dataset(dir / "d.json");
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(30), m0 = m1;
    double n1 = 0, n0 = 0;
    for (const auto& s : ds.samples()) {
        (s.treatment == 1.0 ? m1 : m0) += s.outcome.values();
        (s.treatment == 1.0 ? n1 : n0) += 1;
    }
    const Eigen::VectorXd diff = m1 / n1 - m0 / n0;
    for (Eigen::Index k = 0; k < 30; ++k) CHECK(std::abs(j["delta"][k].get<double>() - diff[k]) <= 1e-10);

    const Run with_ci = run({"estimate", "--data", dir / "d.json", "--estimator", "ipw", "--ci", "--out", dir / "e.json"});
    REQUIRE(with_ci.code == 0);
    const auto jc = nlohmann::json::parse(slurp(dir / "e.json"));
    REQUIRE(jc.contains("ci"));
    CHECK(jc["ci"]["level"] == 0.95);
    CHECK(jc["ci"]["lower"].get<double>() <= jc["ci"]["upper"].get<double>());

    CHECK(run({"estimate", "--data", dir / "d.json", "--estimator", "lasso"}).code == 2);
    CHECK(run({"estimate", "--data", dir / "missing.csv", "--estimator", "ipw"}).code == 2);

    REQUIRE(run({"simulate", "--scenario", "continuous", "--n", "20", "--T", "16", "--out", dir / "c.csv"}).code == 0);
    CHECK(run({"estimate", "--data", dir / "c.csv", "--estimator", "ipw"}).code == 1);
}

TEST_CASE("benchmark") {
    TempDir dir("benchmark");
    const std::vector<std::string> args{"benchmark", "--scenario", "monotonic", "--estimators", "ipw,kernel",
                                        "--sizes", "30,40", "--replicates", "3", "--T", "20", "--lambda", "0.01"};
    auto first = args;
    first.insert(first.end(), {"--out", dir / "one"});
    auto second = args;
    second.insert(second.end(), {"--out", dir / "two"});
    REQUIRE(run(first).code == 0);
    REQUIRE(run(second).code == 0);

    for (const char* f : {"summary.csv", "records.csv", "per_t.csv", "per_t.svg", "boxplot.svg", "metadata.json"})
        CHECK(slurp(dir / (std::string("one/") + f)) == slurp(dir / (std::string("two/") + f)));
    CHECK(fs::exists(dir / "one/timing.csv"));

    std::ifstream summary(dir / "one/summary.csv");
    const auto rows = read_summary_csv(summary);
    CHECK(rows.size() == 4);
    std::ifstream records(dir / "one/records.csv");
    const auto recs = read_records_csv(records);
    CHECK(recs.size() == 12);
    std::ifstream per_t(dir / "one/per_t.csv");
    CHECK(read_per_t_csv(per_t).size() == 4 * 20);

    std::ostringstream again;
    BenchmarkReport report;
    report.rows = rows;
    write_summary_csv(report, again);
    CHECK(again.str() == slurp(dir / "one/summary.csv"));

    auto config = std::ofstream(dir / "cfg.ini");
    config << "[benchmark]\nscenario = monotonic\nestimators = ipw,kernel\nsizes = 30,40\nreplicates = 3\nT = 20\n"
              "lambda = 0.01\nout = "
           << (dir / "three") << "\n";
    config.close();
    REQUIRE(run({"--config", dir / "cfg.ini", "benchmark"}).code == 0);
    CHECK(slurp(dir / "three/summary.csv") == slurp(dir / "one/summary.csv"));

    CHECK(run({"benchmark", "--replicates", "0", "--out", dir / "x"}).code == 2);
    CHECK(run({"benchmark", "--estimators", "ipw,nope", "--out", dir / "x"}).code == 2);
}

TEST_CASE("benchmark report readers reject malformed files") {
    std::istringstream bad_header("estimator,n\nipw,3\n");
    CHECK_THROWS_AS(read_summary_csv(bad_header), SchemaError);
    std::istringstream bad_number("estimator,n,t,abs_error\nipw,10,0.5,abc\n");
    CHECK_THROWS_AS(read_per_t_csv(bad_number), SchemaError);
    std::istringstream short_row("estimator,n,replicate,seed,mae,time_std\nipw,10,0\n");
    CHECK_THROWS_AS(read_records_csv(short_row), SchemaError);
}

TEST_CASE("register") {
    TempDir dir("register");
    REQUIRE(run({"simulate", "--n", "30", "--T", "50", "--seed", "6", "--out", dir / "d.csv"}).code == 0);
    CHECK(run({"register", "--data", dir / "d.csv", "--target", "", "--out", dir / "r.csv"}).code == 2);
    CHECK(run({"register", "--data", dir / "d.csv", "--out", dir / "r.csv"}).code == 2);
    CHECK(run({"register", "--data", dir / "d.csv", "--target", "covariates", "--out", dir / "r.csv"}).code == 1);

    REQUIRE(run({"register", "--data", dir / "d.csv", "--target", "outcomes", "--out", dir / "r.csv"}).code == 0);
    REQUIRE(run({"register", "--data", dir / "r.csv", "--target", "outcomes", "--out", dir / "rr.csv"}).code == 0);
    const Dataset once = load_dataset(dir / "r.csv");
    const Dataset twice = load_dataset(dir / "rr.csv");
    CHECK((once.outcome_matrix() - twice.outcome_matrix()).cwiseAbs().maxCoeff() <= 1e-6);
    const std::string warps = slurp(dir / "warps_outcomes.csv");
    CHECK(warps.rfind("id,g_0001,", 0) == 0);

    // Identical outcome shapes have no phase variability to remove.
    REQUIRE(run({"simulate", "--n", "20", "--T", "40", "--noise", "0", "--shift", "0", "--confounding", "0",
                 "--covariate-dim", "0", "--scenario", "continuous", "--out", dir / "c.csv"})
                .code == 0);
    REQUIRE(run({"register", "--data", dir / "c.csv", "--target", "covariates", "--out", dir / "rc.csv",
                 "--warps-dir", dir / "w"})
                .code == 0);
    std::ifstream wf(dir / "w/warps_covariates.csv");
    std::string line;
    std::getline(wf, line);
    const Grid g = Grid::uniform(40);
    while (std::getline(wf, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        for (std::size_t k = 0; std::getline(ss, cell, ','); ++k)
            CHECK(std::abs(std::stod(cell) - g[k]) <= 2.0 * g.spacing());
    }
}
