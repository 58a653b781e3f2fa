#include "funcause/frechet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "funcause/parallel.hpp"

namespace funcause {

namespace {

Eigen::VectorXd normalized(std::span<const double> weights, std::size_t n) {
    if (n == 0) throw DomainError("Fréchet mean needs at least one curve");
    Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    if (!weights.empty()) {
        if (weights.size() != n) throw WeightError("weight count does not match curve count");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw WeightError("weights must be finite and nonnegative");
            w[static_cast<Eigen::Index>(i)] = weights[i];
        }
    }
    const double total = w.sum();
    if (!(total > 0.0)) throw WeightError("weights must not all be zero");
    return w / total;
}

void require_shared_grid(std::span<const Curve> curves) {
    for (const auto& c : curves)
        if (!(c.grid() == curves.front().grid())) throw DomainError("curves must share a grid");
}

// arccos(s) / sqrt(1 - s^2), continuous at s = 1 where it equals 1.
double arc_ratio(double s) {
    s = std::clamp(s, -1.0, 1.0);
    if (s > 1.0 - 1e-8) return 1.0 + (1.0 - s) / 3.0;
    return std::acos(s) / std::sqrt(1.0 - s * s);
}

struct SphereProblem {
    std::vector<Eigen::VectorXd> roots;  // sqrt of each data vector
    Eigen::VectorXd w;

    double objective(const Eigen::VectorXd& u) const {
        double total = 0.0;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            const double d = 2.0 * std::acos(std::clamp(u.dot(roots[i]), -1.0, 1.0));
            total += w[static_cast<Eigen::Index>(i)] * d * d;
        }
        return total;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& u) const {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
        for (std::size_t i = 0; i < roots.size(); ++i)
            g -= 8.0 * w[static_cast<Eigen::Index>(i)] * arc_ratio(u.dot(roots[i])) * roots[i];
        return g;
    }
};

// Projection onto {u >= 0, ||u|| <= 1}, the image of {g >= 0, sum g <= 1} under u = sqrt(g).
Eigen::VectorXd project(Eigen::VectorXd u) {
    u = u.cwiseMax(0.0);
    const double norm = u.norm();
    if (norm > 1.0) u /= norm;
    return u;
}

struct SphereRun {
    Eigen::VectorXd u;
    double objective;
    bool converged;
};

SphereRun sphere_descent(const SphereProblem& prob, Eigen::VectorXd u, const FrechetOptions& opt) {
    double f = prob.objective(u);
    double step = 1.0;
    for (std::size_t iter = 0; iter < opt.sphere_max_iter; ++iter) {
        const Eigen::VectorXd g = prob.gradient(u);
        Eigen::VectorXd next;
        double fn = 0.0;
        double t = std::min(1.0, 2.0 * step);
        while (true) {
            next = project(u - t * g);
            fn = prob.objective(next);
            if (fn <= f - 1e-4 / t * (next - u).squaredNorm() || t < 1e-14) break;
            t *= 0.5;
        }
        const double mapping = (next - u).norm() / t;
        if (fn <= f) {
            u = next;
            f = fn;
        }
        step = t;
        if (mapping < opt.sphere_tol) return {u, f, true};
    }
    return {u, f, false};
}

FrechetMeanResult sphere_mean(std::span<const Curve> curves, const Eigen::VectorXd& w, const FrechetOptions& opt) {
    SphereProblem prob;
    prob.w = w;
    Eigen::VectorXd euclid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(curves.front().size()));
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const Eigen::VectorXd& v = curves[i].values();
        if ((v.array() < 0.0).any()) throw DomainError("Fisher-Rao sphere mean needs nonnegative entries");
        if (v.sum() > 1.0 + 1e-9) throw DomainError("Fisher-Rao sphere mean needs entries summing to at most 1");
        prob.roots.push_back(v.cwiseSqrt());
        euclid += w[static_cast<Eigen::Index>(i)] * v;
    }

    std::vector<Eigen::VectorXd> starts;
    if (euclid.sum() > 0.0) starts.push_back((euclid / euclid.sum()).cwiseSqrt());
    std::size_t best_input = 0;
    double best_input_obj = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const double obj = prob.objective(prob.roots[i]);
        if (obj < best_input_obj) {
            best_input_obj = obj;
            best_input = i;
        }
    }
    starts.push_back(prob.roots[best_input]);

    SphereRun best{starts.front(), std::numeric_limits<double>::infinity(), false};
    for (const auto& s : starts) {
        SphereRun run = sphere_descent(prob, project(s), opt);
        if (run.objective < best.objective) best = std::move(run);
    }
    const Grid& grid = curves.front().grid();
    return FrechetMeanResult{Curve(grid, best.u.cwiseProduct(best.u)), Metric::FisherRaoSphere, best.objective,
                             best.converged};
}

}  // namespace

FrechetMeanResult frechet_mean(std::span<const Curve> curves, std::span<const double> weights, Metric metric,
                               const FrechetOptions& options) {
    const Eigen::VectorXd w = normalized(weights, curves.size());
    require_shared_grid(curves);
    const Grid& grid = curves.front().grid();

    switch (metric) {
        case Metric::Euclidean: {
            if (curves.size() == 1) return FrechetMeanResult{curves.front(), metric, 0.0, true};
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
            for (std::size_t i = 0; i < curves.size(); ++i) mean += w[static_cast<Eigen::Index>(i)] * curves[i].values();
            Curve m(grid, std::move(mean));
            const double obj = frechet_objective(curves, std::span<const double>(w.data(), curves.size()), metric, m);
            return FrechetMeanResult{std::move(m), metric, obj, true};
        }
        case Metric::FisherRaoSrsf: {
            KarcherResult k = karcher_mean(curves, options.karcher, std::span<const double>(w.data(), curves.size()));
            const double obj = k.objective_trace.empty() ? 0.0 : k.objective_trace.back();
            return FrechetMeanResult{std::move(k.mean), metric, obj, k.converged};
        }
        case Metric::FisherRaoSphere:
            if (curves.size() == 1) return FrechetMeanResult{curves.front(), metric, 0.0, true};
            return sphere_mean(curves, w, options);
    }
    throw DomainError("unknown metric");
}

double frechet_objective(std::span<const Curve> curves, std::span<const double> weights, Metric metric,
                         const Curve& candidate, const AlignOptions& align) {
    const Eigen::VectorXd w = normalized(weights, curves.size());
    std::vector<double> sq(curves.size());
    switch (metric) {
        case Metric::Euclidean:
            for (std::size_t i = 0; i < curves.size(); ++i) sq[i] = std::pow(l2_norm(curves[i] - candidate), 2);
            break;
        case Metric::FisherRaoSrsf: {
            const SrsfCurve qc = srsf_transform(candidate);
            parallel_for(curves.size(), [&](std::size_t i) {
                sq[i] = std::pow(align_pair(qc, srsf_transform(curves[i]), align).distance, 2);
            });
            break;
        }
        case Metric::FisherRaoSphere:
            for (std::size_t i = 0; i < curves.size(); ++i) sq[i] = std::pow(fr_distance_sphere(curves[i], candidate), 2);
            break;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < sq.size(); ++i) total += w[static_cast<Eigen::Index>(i)] * sq[i];
    return total;
}

PotentialOutcomes group_potential_outcomes(const Dataset& ds, Metric metric, Weighting weighting,
                                           const PropensityModel* propensity, const FrechetOptions& options) {
    if (!ds.is_binary_treatment()) throw DomainError("potential outcomes need a binary treatment");
    if (weighting == Weighting::InversePropensity && propensity == nullptr)
        throw DomainError("inverse-propensity weighting needs a propensity model");
    std::optional<FrechetMeanResult> arms[2];
    for (int arm : {1, 0}) {
        const auto idx = ds.arm_indices(arm);
        if (idx.empty()) throw ArmEmptyError("treatment arm " + std::to_string(arm) + " is empty");
        std::vector<Curve> curves;
        std::vector<double> weights;
        for (std::size_t i : idx) {
            curves.push_back(ds[i].outcome);
            if (weighting == Weighting::InversePropensity) {
                const double p = propensity->predict(ds[i].covariates);
                weights.push_back(arm == 1 ? 1.0 / p : 1.0 / (1.0 - p));
            }
        }
        arms[arm] = frechet_mean(curves, weights, metric, options);
    }
    return PotentialOutcomes{std::move(*arms[1]), std::move(*arms[0])};
}

DynamicEffect dynamic_effect(const FrechetMeanResult& f1, const FrechetMeanResult& f0, Metric metric) {
    return make_effect(f1.mean, f0.mean, metric);
}

}  // namespace funcause
