#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "benchmark.hpp"
#include "funcause/elastic.hpp"
#include "funcause/parallel.hpp"

#ifndef FUNCAUSE_GIT_HASH
#define FUNCAUSE_GIT_HASH "unknown"
#endif

namespace funcause {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::vector<std::string> estimator_names() {
    std::vector<std::string> names;
    for (EstimatorKind k : all_estimators()) names.emplace_back(to_string(k));
    return names;
}

struct ScenarioArgs {
    ScenarioConfig cfg;
    std::string scenario = "nonmonotonic";
};

void add_scenario_options(CLI::App* app, ScenarioArgs& a) {
    app->add_option("--scenario", a.scenario, "Simulation scenario")
        ->check(CLI::IsMember({"nonmonotonic", "monotonic", "continuous"}))
        ->capture_default_str();
    app->add_option("--T", a.cfg.T, "Grid points per curve")->capture_default_str();
    app->add_option("--amplitude", a.cfg.amplitude, "Peak amplitude")->capture_default_str();
    app->add_option("--width", a.cfg.width, "Peak width")->capture_default_str();
    app->add_option("--noise", a.cfg.noise, "Noise standard deviation")->capture_default_str();
    app->add_option("--shift", a.cfg.shift, "Peak shift range")->capture_default_str();
    app->add_option("--confounding", a.cfg.confounding, "Confounding strength")->capture_default_str();
    app->add_option("--covariate-dim", a.cfg.covariate_dim, "Scalar covariates per unit")->capture_default_str();
}

ScenarioConfig resolve(const ScenarioArgs& a) {
    ScenarioConfig cfg = a.cfg;
    cfg.scenario = scenario_from_string(a.scenario);
    return cfg;
}

ordered_json to_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

ordered_json to_json(const Grid& g) {
    ordered_json arr = ordered_json::array();
    for (double t : g.points()) arr.push_back(t);
    return arr;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("failed writing " + path.string());
}

template <typename W>
void write_with(const fs::path& path, W writer) {
    std::ostringstream os;
    writer(os);
    write_text(path, os.str());
}

// ---- simulate ----

struct SimulateArgs {
    ScenarioArgs scenario;
    std::size_t n = 100;
    std::uint64_t seed = 0;
    std::string out;
    std::string truth;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    ScenarioConfig cfg = resolve(a.scenario);
    cfg.n = a.n;
    cfg.seed = a.seed;
    const Simulation sim = generate(cfg);
    const fs::path data_path(a.out);
    if (data_path.has_parent_path()) fs::create_directories(data_path.parent_path());
    save_dataset(sim.data, data_path);

    fs::path truth_path = a.truth.empty() ? data_path.parent_path() / (data_path.stem().string() + "_truth.json")
                                          : fs::path(a.truth);
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["scenario"] = std::string(to_string(cfg.scenario));
    j["config"] = {{"n", cfg.n},           {"T", cfg.T},         {"amplitude", cfg.amplitude},
                   {"centers", cfg.centers}, {"width", cfg.width}, {"noise", cfg.noise},
                   {"shift", cfg.shift},   {"confounding", cfg.confounding},
                   {"covariate_dim", cfg.covariate_dim},       {"seed", cfg.seed}};
    j["grid"] = to_json(sim.truth.beta_x.grid());
    j["beta_x"] = to_json(sim.truth.beta_x.values());
    j["effect"] = to_json(sim.truth.effect.values());
    j["true_phi_dATE"] = sim.truth.true_phi_dATE;
    j["dose_slope"] = sim.truth.dose_slope;
    write_text(truth_path, j.dump(2) + "\n");
    out << "wrote " << data_path.string() << " and " << truth_path.string() << "\n";
    return 0;
}

// ---- estimate ----

struct EstimateArgs {
    std::string data;
    std::string estimator;
    bool ci = false;
    double level = 0.95;
    std::optional<double> lambda;
    std::string metric = "euclidean";
    std::size_t max_iter = 10;
    double tol = 1e-4;
    std::uint64_t seed = 0;
    std::string out = "-";
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
    const Dataset ds = load_dataset(a.data);
    EstimateOptions o;
    o.kernel.lambda = a.lambda;
    o.kernel.tuning.seed = a.seed;
    o.metric = metric_from_string(a.metric);
    o.max_iter = a.max_iter;
    o.tol = a.tol;
    if (a.ci) o.ci_level = a.level;

    const auto start = std::chrono::steady_clock::now();
    const EffectEstimate e = estimate(ds, estimator_from_string(a.estimator), o);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["estimator"] = e.estimator;
    j["metric"] = std::string(to_string(e.effect.metric));
    j["n"] = ds.size();
    j["grid"] = to_json(e.effect.delta.grid());
    j["delta"] = to_json(e.effect.delta.values());
    j["scalar_effect"] = e.effect.scalar_norm;
    if (e.ci) {
        ordered_json ci;
        ci["estimate"] = e.ci->estimate;
        ci["lower"] = e.ci->lower;
        ci["upper"] = e.ci->upper;
        ci["level"] = e.ci->level;
        ci["regime"] = std::string(to_string(e.ci->regime));
        ci["sigma"] = e.ci->sigma;
        if (e.ci->pointwise) {
            ci["pointwise_lower"] = to_json(e.ci->pointwise->lower.values());
            ci["pointwise_upper"] = to_json(e.ci->pointwise->upper.values());
        }
        j["ci"] = std::move(ci);
    }
    j["metadata"] = e.metadata;
    j["runtime_seconds"] = seconds;
    const std::string text = j.dump(2) + "\n";
    if (a.out == "-")
        out << text;
    else
        write_text(a.out, text);
    return 0;
}

// ---- benchmark ----

struct BenchmarkArgs {
    ScenarioArgs scenario;
    std::vector<std::string> estimators{"ipw", "dr", "kernel", "operator-kernel", "srvf-operator-kernel"};
    std::vector<std::size_t> sizes{50, 100, 250};
    std::size_t replicates = 5;
    std::uint64_t seed = 0;
    std::optional<double> lambda;
    std::string out;
};

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out) {
    BenchmarkConfig cfg;
    cfg.scenario = resolve(a.scenario);
    cfg.estimators.clear();
    for (const auto& name : a.estimators) cfg.estimators.push_back(estimator_from_string(name));
    cfg.sizes = a.sizes;
    cfg.replicates = a.replicates;
    cfg.seed = a.seed;
    cfg.options.kernel.lambda = a.lambda;
    cfg.options.kernel.tuning.seed = a.seed;
    BenchmarkReport report = run_benchmark(cfg);
    report.metadata["git_hash"] = FUNCAUSE_GIT_HASH;

    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_with(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(report, os); });
    write_with(dir / "records.csv", [&](std::ostream& os) { write_records_csv(report, os); });
    write_with(dir / "per_t.csv", [&](std::ostream& os) { write_per_t_csv(report, os); });
    write_with(dir / "timing.csv", [&](std::ostream& os) { write_timing_csv(report, os); });
    write_with(dir / "per_t.svg", [&](std::ostream& os) { write_per_t_svg(report, os); });
    write_with(dir / "boxplot.svg", [&](std::ostream& os) { write_boxplot_svg(report, os); });

    ordered_json meta;
    meta["schema_version"] = kSchemaVersion;
    for (const auto& [k, v] : report.metadata) meta[k] = v;
    meta["estimators"] = a.estimators;
    meta["sizes"] = a.sizes;
    meta["scenario_config"] = {{"T", cfg.scenario.T},         {"amplitude", cfg.scenario.amplitude},
                               {"width", cfg.scenario.width}, {"noise", cfg.scenario.noise},
                               {"shift", cfg.scenario.shift}, {"confounding", cfg.scenario.confounding},
                               {"covariate_dim", cfg.scenario.covariate_dim}};
    if (a.lambda) meta["lambda"] = *a.lambda;
    write_text(dir / "metadata.json", meta.dump(2) + "\n");

    out << "estimator,n,mae_mean,time_std\n";
    for (const auto& r : report.rows)
        out << r.estimator << ',' << r.n << ',' << format_double(r.mae_mean) << ',' << format_double(r.time_std)
            << '\n';
    return 0;
}

// ---- register ----

struct RegisterArgs {
    std::string data;
    std::string target;
    std::size_t passes = 10;
    std::string out;
    std::string warps_dir;
};

void write_warps(const fs::path& path, const Dataset& ds, const std::vector<WarpingFunction>& warps) {
    write_with(path, [&](std::ostream& os) {
        const std::size_t T = warps.front().size();
        os << "id";
        for (std::size_t k = 1; k <= T; ++k) os << ",g_" << column_index(k, T);
        os << '\n';
        for (std::size_t i = 0; i < warps.size(); ++i) {
            os << ds[i].id;
            const Eigen::VectorXd& v = warps[i].values();
            for (Eigen::Index k = 0; k < v.size(); ++k) os << ',' << format_double(v[k]);
            os << '\n';
        }
    });
}

int cmd_register(const RegisterArgs& a, std::ostream& out) {
    const Dataset ds = load_dataset(a.data);
    const bool outcomes = a.target == "outcomes" || a.target == "both";
    const bool covariates = a.target == "covariates" || a.target == "both";
    if (covariates && !ds.has_covariate_curves()) throw DomainError("dataset has no covariate curves to register");
    KarcherOptions karcher;
    const fs::path out_path(a.out);
    const fs::path warps_dir = a.warps_dir.empty() ? out_path.parent_path() : fs::path(a.warps_dir);

    Dataset result = ds;
    if (outcomes) {
        const Registration r = register_curves(ds.outcomes(), karcher, a.passes);
        result = result.with_outcomes(r.curves);
        write_warps(warps_dir / "warps_outcomes.csv", ds, r.warps);
        out << "outcomes: " << r.passes << " passes" << (r.converged ? "" : " (not converged)") << "\n";
    }
    if (covariates) {
        std::vector<Curve> v;
        for (const auto& s : ds.samples()) v.push_back(*s.covariate_curve);
        const Registration r = register_curves(v, karcher, a.passes);
        result = result.with_covariate_curves(r.curves);
        write_warps(warps_dir / "warps_covariates.csv", ds, r.warps);
        out << "covariates: " << r.passes << " passes" << (r.converged ? "" : " (not converged)") << "\n";
    }
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    save_dataset(result, out_path);
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Causal effect estimation for functional outcomes", "funcause"};
    app.set_config("--config", "", "INI file; [simulate], [estimate], [benchmark] and [register] sections");
    app.require_subcommand(1);
    std::optional<std::size_t> threads;
    app.add_option("--threads", threads, "Worker threads (overrides FUNCAUSE_THREADS)")->check(CLI::PositiveNumber);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Write a simulated dataset and its ground truth");
    add_scenario_options(simulate, sim.scenario);
    simulate->add_option("--n", sim.n, "Units")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    simulate->add_option("--out", sim.out, "Dataset path (.csv or .json)")->required();
    simulate->add_option("--truth", sim.truth, "Ground-truth JSON path (default <out>_truth.json)");

    EstimateArgs est;
    CLI::App* estimate_cmd = app.add_subcommand("estimate", "Estimate the dynamic effect on a dataset");
    estimate_cmd->add_option("--data", est.data, "Dataset path")->required()->check(CLI::ExistingFile);
    estimate_cmd->add_option("--estimator", est.estimator, "Estimator")
        ->required()
        ->check(CLI::IsMember(estimator_names()));
    estimate_cmd->add_flag("--ci", est.ci, "Add a confidence interval for the effect norm");
    estimate_cmd->add_option("--level", est.level, "Confidence level")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    estimate_cmd->add_option("--lambda", est.lambda, "Fixed ridge parameter (skips the holdout search)")
        ->check(CLI::PositiveNumber);
    estimate_cmd->add_option("--metric", est.metric, "Scalar effect metric for kernel estimators")
        ->check(CLI::IsMember({"euclidean", "fisher-rao-srsf"}))
        ->capture_default_str();
    estimate_cmd->add_option("--max-iter", est.max_iter, "iterative-srvf iteration cap")->capture_default_str();
    estimate_cmd->add_option("--tol", est.tol, "iterative-srvf tolerance")->capture_default_str();
    estimate_cmd->add_option("--seed", est.seed, "Holdout split seed")->capture_default_str();
    estimate_cmd->add_option("--out", est.out, "Result JSON path, - for stdout")->capture_default_str();

    BenchmarkArgs bench;
    CLI::App* benchmark = app.add_subcommand("benchmark", "Run the replicate x size x estimator grid");
    add_scenario_options(benchmark, bench.scenario);
    benchmark->add_option("--estimators", bench.estimators, "Estimators")
        ->delimiter(',')
        ->check(CLI::IsMember(estimator_names()))
        ->capture_default_str();
    benchmark->add_option("--sizes", bench.sizes, "Sample sizes")->delimiter(',')->capture_default_str();
    benchmark->add_option("--replicates", bench.replicates, "Replicates per size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    benchmark->add_option("--seed", bench.seed, "Base seed")->capture_default_str();
    benchmark->add_option("--lambda", bench.lambda, "Fixed ridge parameter")->check(CLI::PositiveNumber);
    benchmark->add_option("--out", bench.out, "Output directory")->required();

    RegisterArgs reg;
    CLI::App* register_cmd = app.add_subcommand("register", "Register curves to their Karcher mean");
    register_cmd->add_option("--data", reg.data, "Dataset path")->required()->check(CLI::ExistingFile);
    register_cmd->add_option("--target", reg.target, "Curves to register")
        ->required()
        ->check(CLI::IsMember({"outcomes", "covariates", "both"}));
    register_cmd->add_option("--passes", reg.passes, "Maximum registration passes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    register_cmd->add_option("--out", reg.out, "Registered dataset path")->required();
    register_cmd->add_option("--warps-dir", reg.warps_dir, "Directory for warp CSVs (default: next to --out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (threads) set_worker_count(*threads);
        if (simulate->parsed()) return cmd_simulate(sim, out);
        if (estimate_cmd->parsed()) return cmd_estimate(est, out);
        if (benchmark->parsed()) return cmd_benchmark(bench, out);
        if (register_cmd->parsed()) return cmd_register(reg, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace funcause
