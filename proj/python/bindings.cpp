#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "funcause/elastic.hpp"
#include "funcause/frechet.hpp"
#include "funcause/inference.hpp"
#include "funcause/kernels.hpp"
#include "funcause/pipeline.hpp"
#include "funcause/simgen.hpp"

namespace py = pybind11;
using namespace funcause;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<Curve> rows_to_curves(const RowMatrix& m) {
    const Grid grid = Grid::uniform(static_cast<std::size_t>(m.cols()));
    std::vector<Curve> curves;
    curves.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) curves.emplace_back(grid, m.row(i).transpose());
    return curves;
}

template <typename C>
RowMatrix curves_to_rows(const std::vector<C>& curves) {
    if (curves.empty()) return RowMatrix();
    RowMatrix m(static_cast<Eigen::Index>(curves.size()), static_cast<Eigen::Index>(curves.front().size()));
    for (std::size_t i = 0; i < curves.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = curves[i].values().transpose();
    return m;
}

Curve as_curve(const Eigen::VectorXd& v) { return Curve(Grid::uniform(static_cast<std::size_t>(v.size())), v); }

Dataset dataset_from_arrays(const Eigen::VectorXd& treatment, const RowMatrix& outcomes,
                            const std::optional<RowMatrix>& covariates, const std::optional<RowMatrix>& curves,
                            const std::optional<std::vector<std::string>>& ids) {
    const auto n = treatment.size();
    if (outcomes.rows() != n) throw DomainError("outcomes need one row per unit");
    if (covariates && covariates->rows() != n) throw DomainError("covariates need one row per unit");
    if (curves && curves->rows() != n) throw DomainError("covariate curves need one row per unit");
    if (ids && static_cast<Eigen::Index>(ids->size()) != n) throw DomainError("ids need one entry per unit");
    const Grid grid = Grid::uniform(static_cast<std::size_t>(outcomes.cols()));
    std::optional<Grid> cgrid;
    if (curves) cgrid = Grid::uniform(static_cast<std::size_t>(curves->cols()));
    std::vector<ObservationalSample> samples;
    for (Eigen::Index i = 0; i < n; ++i) {
        ObservationalSample s{ids ? (*ids)[static_cast<std::size_t>(i)] : "u" + std::to_string(i + 1), treatment[i],
                              covariates ? Eigen::VectorXd(covariates->row(i).transpose()) : Eigen::VectorXd(),
                              std::nullopt, Curve(grid, outcomes.row(i).transpose())};
        if (curves) s.covariate_curve = Curve(*cgrid, curves->row(i).transpose());
        samples.push_back(std::move(s));
    }
    return Dataset(std::move(samples));
}

py::dict ci_dict(const EffectCI& ci) {
    py::dict d;
    d["estimate"] = ci.estimate;
    d["lower"] = ci.lower;
    d["upper"] = ci.upper;
    d["level"] = ci.level;
    d["regime"] = std::string(to_string(ci.regime));
    d["sigma"] = ci.sigma;
    if (ci.pointwise) {
        d["pointwise_lower"] = ci.pointwise->lower.values();
        d["pointwise_upper"] = ci.pointwise->upper.values();
    }
    return d;
}

py::dict warp_values(const std::vector<WarpingFunction>& warps, py::dict d) {
    d["warps"] = curves_to_rows(warps);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Causal effect estimation for functional outcomes";
    py::register_exception<Error>(m, "FuncauseError", PyExc_ValueError);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&dataset_from_arrays), py::arg("treatment"), py::arg("outcomes"),
             py::arg("covariates") = std::nullopt, py::arg("covariate_curves") = std::nullopt,
             py::arg("ids") = std::nullopt)
        .def_static("load", [](const std::filesystem::path& p) { return load_dataset(p); })
        .def("save", [](const Dataset& ds, const std::filesystem::path& p) { save_dataset(ds, p); })
        .def("__len__", &Dataset::size)
        .def_property_readonly("treatments", &Dataset::treatments)
        .def_property_readonly("covariates", &Dataset::covariate_matrix)
        .def_property_readonly("outcomes", &Dataset::outcome_matrix)
        .def_property_readonly("covariate_curves",
                               [](const Dataset& ds) -> std::optional<Eigen::MatrixXd> {
                                   if (!ds.has_covariate_curves()) return std::nullopt;
                                   return ds.covariate_curve_matrix();
                               })
        .def_property_readonly("grid",
                               [](const Dataset& ds) {
                                   const auto p = ds.outcome_grid().points();
                                   return std::vector<double>(p.begin(), p.end());
                               })
        .def_property_readonly("ids",
                               [](const Dataset& ds) {
                                   std::vector<std::string> ids;
                                   for (const auto& s : ds.samples()) ids.push_back(s.id);
                                   return ids;
                               })
        .def_property_readonly("is_binary", &Dataset::is_binary_treatment);

    m.def("estimators", [] {
        std::vector<std::string> names;
        for (EstimatorKind k : all_estimators()) names.emplace_back(to_string(k));
        return names;
    });

    m.def(
        "simulate",
        [](const std::string& scenario, std::size_t n, std::size_t T, std::uint64_t seed, double noise, double shift,
           double confounding, double amplitude, double width, std::size_t covariate_dim) {
            ScenarioConfig cfg;
            cfg.scenario = scenario_from_string(scenario);
            cfg.n = n;
            cfg.T = T;
            cfg.seed = seed;
            cfg.noise = noise;
            cfg.shift = shift;
            cfg.confounding = confounding;
            cfg.amplitude = amplitude;
            cfg.width = width;
            cfg.covariate_dim = covariate_dim;
            Simulation sim = generate(cfg);
            py::dict truth;
            truth["beta_x"] = sim.truth.beta_x.values();
            truth["effect"] = sim.truth.effect.values();
            truth["true_phi_dATE"] = sim.truth.true_phi_dATE;
            truth["dose_slope"] = sim.truth.dose_slope;
            return py::make_tuple(std::move(sim.data), truth);
        },
        py::arg("scenario") = "nonmonotonic", py::arg("n") = 100, py::arg("T") = 100, py::arg("seed") = 0,
        py::arg("noise") = 0.1, py::arg("shift") = 0.05, py::arg("confounding") = 1.0, py::arg("amplitude") = 1.0,
        py::arg("width") = 0.05, py::arg("covariate_dim") = 3);

    m.def(
        "estimate",
        [](const Dataset& ds, const std::string& estimator, std::optional<double> lambda,
           std::optional<double> ci_level, const std::string& metric, std::size_t max_iter, double tol,
           std::uint64_t seed) {
            EstimateOptions o;
            o.kernel.lambda = lambda;
            o.kernel.tuning.seed = seed;
            o.ci_level = ci_level;
            o.metric = metric_from_string(metric);
            o.max_iter = max_iter;
            o.tol = tol;
            std::optional<EffectEstimate> result;
            {
                py::gil_scoped_release release;
                result = estimate(ds, estimator_from_string(estimator), o);
            }
            const EffectEstimate& e = *result;
            py::dict d;
            d["estimator"] = e.estimator;
            d["delta"] = e.effect.delta.values();
            d["scalar_effect"] = e.effect.scalar_norm;
            d["metric"] = std::string(to_string(e.effect.metric));
            d["metadata"] = e.metadata;
            if (e.ci) d["ci"] = ci_dict(*e.ci);
            return d;
        },
        py::arg("dataset"), py::arg("estimator"), py::arg("lam") = std::nullopt, py::arg("ci_level") = std::nullopt,
        py::arg("metric") = "euclidean", py::arg("max_iter") = 10, py::arg("tol") = 1e-4, py::arg("seed") = 0);

    m.def(
        "effect_ci",
        [](const Dataset& ds, const Eigen::VectorXd& delta, double level) {
            return ci_dict(effect_ci(ds, Curve(ds.outcome_grid(), delta), level));
        },
        py::arg("dataset"), py::arg("delta"), py::arg("level") = 0.95);

    m.def(
        "welch_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const WelchResult r = welch_t_test(a, b);
            return py::make_tuple(r.t, r.df, r.p);
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "srsf",
        [](const Eigen::VectorXd& f) {
            const SrsfCurve q = srsf_transform(as_curve(f));
            return py::make_tuple(q.values(), q.origin());
        },
        py::arg("f"));
    m.def(
        "srsf_inverse",
        [](const Eigen::VectorXd& q, double origin) {
            return srsf_inverse(SrsfCurve(Grid::uniform(static_cast<std::size_t>(q.size())), q, origin)).values();
        },
        py::arg("q"), py::arg("origin") = 0.0);

    m.def(
        "align",
        [](const Eigen::VectorXd& f1, const Eigen::VectorXd& f2) {
            const Curve c2 = as_curve(f2);
            const Alignment a = align_pair(srsf_transform(as_curve(f1)), srsf_transform(c2));
            py::dict d;
            d["warp"] = a.warp.values();
            d["aligned"] = warp_curve(c2, a.warp).values();
            d["distance"] = a.distance;
            return d;
        },
        py::arg("f1"), py::arg("f2"));

    m.def(
        "karcher_mean",
        [](const RowMatrix& curves, std::size_t max_iter) {
            KarcherOptions o;
            o.max_iter = max_iter;
            const auto cs = rows_to_curves(curves);
            std::optional<KarcherResult> r;
            {
                py::gil_scoped_release release;
                r = karcher_mean(cs, o);
            }
            py::dict d;
            d["mean"] = r->mean.values();
            d["objective_trace"] = r->objective_trace;
            d["converged"] = r->converged;
            return warp_values(r->warps, d);
        },
        py::arg("curves"), py::arg("max_iter") = 20);

    m.def(
        "register_curves",
        [](const RowMatrix& curves, std::size_t passes) {
            const auto cs = rows_to_curves(curves);
            std::optional<Registration> r;
            {
                py::gil_scoped_release release;
                r = register_curves(cs, {}, passes);
            }
            py::dict d;
            d["curves"] = curves_to_rows(r->curves);
            d["mean"] = r->mean.values();
            d["passes"] = r->passes;
            d["converged"] = r->converged;
            return warp_values(r->warps, d);
        },
        py::arg("curves"), py::arg("passes") = 1);

    m.def(
        "fr_gram",
        [](const RowMatrix& curves, double zeta) {
            const auto cs = rows_to_curves(curves);
            Eigen::MatrixXd k(curves.rows(), curves.rows());
            for (std::size_t i = 0; i < cs.size(); ++i)
                for (std::size_t j = 0; j <= i; ++j)
                    k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = fr_kernel(cs[i], cs[j], zeta);
            return k;
        },
        py::arg("curves"), py::arg("zeta"));

    m.def(
        "frechet_mean",
        [](const RowMatrix& curves, const std::vector<double>& weights, const std::string& metric) {
            const auto cs = rows_to_curves(curves);
            const FrechetMeanResult r = frechet_mean(cs, weights, metric_from_string(metric));
            return py::make_tuple(r.mean.values(), r.objective);
        },
        py::arg("curves"), py::arg("weights") = std::vector<double>{}, py::arg("metric") = "euclidean");
}
