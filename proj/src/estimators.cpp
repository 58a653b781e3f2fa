#include "funcause/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace funcause {

namespace {

struct Eigen2 {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
};

// Eigenpairs of a symmetric PSD matrix, with round-off negatives set to 0.
Eigen2 psd_eigen(const Eigen::MatrixXd& k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    return {es.eigenvectors(), es.eigenvalues().cwiseMax(0.0)};
}

Eigen::MatrixXd symmetric(const Eigen::MatrixXd& k) { return 0.5 * (k + k.transpose()); }

// Spectral coefficients U1' Y U2 / (d1 d2' + lambda).
Eigen::MatrixXd spectral_solve(const Eigen2& in, const Eigen2* out, const Eigen::MatrixXd& rotated, double lambda) {
    Eigen::MatrixXd denom = out ? Eigen::MatrixXd(in.values * out->values.transpose())
                                : Eigen::MatrixXd(in.values.replicate(1, rotated.cols()));
    return rotated.cwiseQuotient((denom.array() + lambda).matrix());
}

bool binary_values(const Eigen::VectorXd& x) {
    return (x.array() == 0.0 || x.array() == 1.0).all();
}

KernelInputs take_rows(const KernelInputs& in, const std::vector<std::size_t>& idx) {
    KernelInputs out;
    const auto m = static_cast<Eigen::Index>(idx.size());
    out.treatment.resize(m);
    out.covariates.resize(m, in.covariates.cols());
    out.curves.resize(in.has_curves() ? m : 0, in.curves.cols());
    out.curve_srsf.resize(in.has_curves() ? m : 0, in.curve_srsf.cols());
    out.curve_grid = in.curve_grid;
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto i = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]);
        out.treatment[r] = in.treatment[i];
        out.covariates.row(r) = in.covariates.row(i);
        if (in.has_curves()) {
            out.curves.row(r) = in.curves.row(i);
            out.curve_srsf.row(r) = in.curve_srsf.row(i);
        }
    }
    return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& y, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), y.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = y.row(static_cast<Eigen::Index>(idx[r]));
    return out;
}

}  // namespace

KrrModel::KrrModel(KernelInputs train, InputKernel kernel, std::optional<GramMatrix> output, double lambda, Grid grid,
                   Eigen::MatrixXd alpha)
    : train_(std::move(train)),
      kernel_(std::move(kernel)),
      output_(std::move(output)),
      lambda_(lambda),
      grid_(std::move(grid)),
      alpha_(std::move(alpha)) {
    if (!(lambda_ > 0.0)) throw DomainError("lambda must be positive");
    if (!alpha_.allFinite()) throw NumericalError("KRR coefficients are not finite");
}

Eigen::MatrixXd KrrModel::predict(const KernelInputs& at) const {
    const Eigen::MatrixXd k = cross_kernel(at, train_, kernel_);
    if (output_) return k * alpha_ * output_->entries();
    return k * alpha_;
}

Eigen::MatrixXd KrrModel::fitted() const { return predict(train_); }

KrrModel krr_fit(const KernelInputs& inputs, const Eigen::MatrixXd& outcomes, const Grid& grid,
                 const InputKernel& kernel, const std::optional<GramMatrix>& output, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    if (outcomes.rows() != static_cast<Eigen::Index>(inputs.size()))
        throw DomainError("outcome rows must match the number of inputs");
    if (static_cast<std::size_t>(outcomes.cols()) != grid.size()) throw DomainError("outcome columns must match the grid");
    if (output && static_cast<std::size_t>(output->rows()) != grid.size())
        throw DomainError("output Gram size must match the grid");

    const Eigen2 in = psd_eigen(symmetric(cross_kernel(inputs, inputs, kernel)));
    Eigen::MatrixXd alpha;
    if (output) {
        const Eigen2 out = psd_eigen(output->entries());
        const Eigen::MatrixXd coef = spectral_solve(in, &out, in.vectors.transpose() * outcomes * out.vectors, lambda);
        alpha = in.vectors * coef * out.vectors.transpose();
    } else {
        alpha = in.vectors * spectral_solve(in, nullptr, in.vectors.transpose() * outcomes, lambda);
    }
    if (!alpha.allFinite()) throw NumericalError("KRR solve produced non-finite coefficients");
    return KrrModel(inputs, kernel, output, lambda, grid, std::move(alpha));
}

KrrModel krr_fit(const Dataset& ds, const InputKernel& kernel, const std::optional<GramMatrix>& output, double lambda) {
    return krr_fit(KernelInputs::from_dataset(ds), ds.outcome_matrix(), ds.outcome_grid(), kernel, output, lambda);
}

Curve potential_outcome(const KrrModel& model, double x) {
    const Eigen::MatrixXd pred = model.predict(model.train().with_treatment(x));
    return Curve(model.grid(), pred.colwise().mean().transpose());
}

DynamicEffect kernel_dynamic_effect(const KrrModel& model, Metric metric, double x1, double x0) {
    return make_effect(potential_outcome(model, x1), potential_outcome(model, x0), metric);
}

DoseResponseCurve dose_response(const KrrModel& model, const std::vector<double>& levels, Metric metric) {
    if (metric == Metric::FisherRaoSphere) throw DomainError("dose response is defined for euclidean and fisher-rao-srsf");
    DoseResponseCurve out;
    for (double x : levels) {
        Curve phi = potential_outcome(model, x);
        const double v = metric == Metric::Euclidean ? l2_norm(phi) : l2_norm(srsf_transform(phi).values(), phi.grid());
        out.levels.push_back(x);
        out.effects.push_back(v);
        out.curves.push_back(std::move(phi));
    }
    return out;
}

InputKernel heuristic_kernel(const KernelInputs& inputs, double multiplier) {
    if (!(multiplier > 0.0)) throw DomainError("bandwidth multiplier must be positive");
    InputKernel k;
    if (binary_values(inputs.treatment)) {
        k.treatment = KernelSpec::binary();
    } else {
        k.treatment = KernelSpec::squared_exponential(multiplier * median_heuristic(Eigen::MatrixXd(inputs.treatment)));
    }
    k.covariates = inputs.covariates.cols() > 0
                       ? KernelSpec::squared_exponential(multiplier * median_heuristic(inputs.covariates))
                       : KernelSpec::constant();
    if (inputs.has_curves()) {
        // Distances between SRSF rows under the grid quadrature weights.
        const Eigen::VectorXd w = inputs.curve_grid->quadrature_weights().cwiseSqrt();
        const double med = multiplier * median_heuristic(Eigen::MatrixXd(inputs.curve_srsf * w.asDiagonal()));
        k.curves = KernelSpec::fisher_rao(1.0 / (2.0 * med * med));
    }
    return k;
}

Hyperparameters select_hyperparameters(const KernelInputs& inputs, const Eigen::MatrixXd& outcomes, const Grid& grid,
                                       const KernelEstimatorOptions& options) {
    const double base_out = default_output_lengthscale(grid);
    const bool op = options.output == OutputMode::Operator;
    if (options.lambda) {
        const double b = options.bandwidth_multiplier.value_or(1.0);
        const double o = options.output_multiplier.value_or(1.0);
        return {heuristic_kernel(inputs, b), op ? std::optional<double>(o * base_out) : std::nullopt, *options.lambda,
                0.0};
    }

    const TuningGrid& tg = options.tuning;
    const std::size_t n = inputs.size();
    if (n < 3) throw DomainError("hyperparameter search needs at least 3 units");
    if (!(tg.holdout > 0.0 && tg.holdout < 1.0)) throw DomainError("holdout fraction must be in (0, 1)");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(tg.seed);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    const auto n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(tg.holdout * static_cast<double>(n))),
                                                1, n - 2);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(tr.begin(), tr.end());
    const KernelInputs in_tr = take_rows(inputs, tr), in_val = take_rows(inputs, val);
    const Eigen::MatrixXd y_tr = take_rows(outcomes, tr), y_val = take_rows(outcomes, val);

    const std::vector<double> bws = options.bandwidth_multiplier ? std::vector<double>{*options.bandwidth_multiplier}
                                                                 : tg.bandwidth_multipliers;
    std::vector<double> outs{1.0};
    if (op && options.output_multiplier) outs = {*options.output_multiplier};
    else if (op) outs = tg.output_multipliers;

    Hyperparameters best{heuristic_kernel(inputs, bws.front()), std::nullopt, tg.lambdas.front(),
                         std::numeric_limits<double>::infinity()};
    for (double b : bws) {
        const InputKernel kern = heuristic_kernel(inputs, b);
        const Eigen2 in = psd_eigen(symmetric(cross_kernel(in_tr, in_tr, kern)));
        const Eigen::MatrixXd kv = cross_kernel(in_val, in_tr, kern) * in.vectors;
        const Eigen::MatrixXd rot_in = in.vectors.transpose() * y_tr;
        for (double o : outs) {
            std::optional<Eigen2> out;
            if (op) out = psd_eigen(output_gram(grid, o * base_out).entries());
            const Eigen::MatrixXd rot = out ? Eigen::MatrixXd(rot_in * out->vectors) : rot_in;
            for (double lambda : tg.lambdas) {
                const Eigen::MatrixXd coef = spectral_solve(in, out ? &*out : nullptr, rot, lambda);
                const Eigen::MatrixXd pred = out ? Eigen::MatrixXd(kv * coef * out->values.asDiagonal() * out->vectors.transpose())
                                                 : Eigen::MatrixXd(kv * coef);
                const double mse = (pred - y_val).squaredNorm() / static_cast<double>(y_val.size());
                if (std::isfinite(mse) && mse < best.holdout_mse) {
                    best = {kern, op ? std::optional<double>(o * base_out) : std::nullopt, lambda, mse};
                }
            }
        }
    }
    if (!std::isfinite(best.holdout_mse)) throw NumericalError("hyperparameter search found no finite holdout error");
    return best;
}

namespace {

KrrModel fit_with(const KernelInputs& inputs, const Eigen::MatrixXd& y, const Grid& grid, const Hyperparameters& h) {
    std::optional<GramMatrix> out;
    if (h.output_lengthscale) out = output_gram(grid, *h.output_lengthscale);
    return krr_fit(inputs, y, grid, h.kernel, out, h.lambda);
}

}  // namespace

KrrModel fit_kernel_model(const Dataset& ds, const KernelEstimatorOptions& options) {
    const KernelInputs inputs = KernelInputs::from_dataset(ds);
    const Eigen::MatrixXd y = ds.outcome_matrix();
    return fit_with(inputs, y, ds.outcome_grid(), select_hyperparameters(inputs, y, ds.outcome_grid(), options));
}

Dataset register_dataset(const Dataset& ds, bool outcomes, bool covariates, const KarcherOptions& options,
                         std::size_t passes) {
    Dataset out = ds;
    if (outcomes) out = out.with_outcomes(register_curves(ds.outcomes(), options, passes).curves);
    if (covariates && ds.has_covariate_curves()) {
        std::vector<Curve> v;
        v.reserve(ds.size());
        for (const auto& s : ds.samples()) v.push_back(*s.covariate_curve);
        out = out.with_covariate_curves(register_curves(v, options, passes).curves);
    }
    return out;
}

IterativeResult iterative_srvf_estimate(const Dataset& ds, const IterativeOptions& options) {
    if (!(options.tol >= 0.0)) throw DomainError("tolerance must be nonnegative");
    const Grid& grid = ds.outcome_grid();

    Dataset current = register_dataset(ds, true, true, options.karcher);
    KernelInputs inputs = KernelInputs::from_dataset(current);
    Eigen::MatrixXd y = current.outcome_matrix();
    const Hyperparameters h = select_hyperparameters(inputs, y, grid, options.kernel);
    KrrModel model = fit_with(inputs, y, grid, h);

    if (!ds.has_covariate_curves()) return {std::move(model), std::move(current), {}, 1, true};

    const auto rms = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
    };
    Eigen::MatrixXd previous = fit_with(KernelInputs::from_dataset(ds), ds.outcome_matrix(), grid, h).fitted();
    Eigen::MatrixXd now = model.fitted();
    std::vector<double> trace{rms(now, previous)};
    std::size_t iterations = 1;
    bool converged = trace.back() < options.tol;
    KrrModel best_model = model;
    Dataset best_data = current;
    double best_step = trace.back();
    while (!converged && iterations < std::max<std::size_t>(1, options.max_iter)) {
        current = register_dataset(current, true, true, options.karcher);
        inputs = KernelInputs::from_dataset(current);
        y = current.outcome_matrix();
        model = fit_with(inputs, y, grid, h);
        previous = std::move(now);
        now = model.fitted();
        trace.push_back(rms(now, previous));
        if (!std::isfinite(trace.back())) throw NumericalError("iterative estimate diverged");
        ++iterations;
        converged = trace.back() < options.tol;
        if (converged || trace.back() < best_step) {
            best_step = trace.back();
            best_model = model;
            best_data = current;
        }
    }
    // Without convergence the iterate with the smallest step is returned.
    return {std::move(best_model), std::move(best_data), std::move(trace), iterations, converged};
}

}  // namespace funcause
