#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "funcause/effect.hpp"
#include "funcause/elastic.hpp"
#include "funcause/kernels.hpp"

namespace funcause {

/**
 * Kernel ridge regression with curve-valued coefficients. The fitted function
 * is m(x, v) = sum_j k((x, v), (x_j, v_j)) K_Y alpha_j, where K_Y is the output
 * Gram (the identity when absent).
 */
class KrrModel {
public:
    KrrModel(KernelInputs train, InputKernel kernel, std::optional<GramMatrix> output, double lambda, Grid grid,
             Eigen::MatrixXd alpha);

    const KernelInputs& train() const noexcept { return train_; }
    const InputKernel& kernel() const noexcept { return kernel_; }
    const std::optional<GramMatrix>& output() const noexcept { return output_; }
    double lambda() const noexcept { return lambda_; }
    const Grid& grid() const noexcept { return grid_; }
    const Eigen::MatrixXd& alpha() const noexcept { return alpha_; }  ///< n x T

    /// Predictions at each row of `at`, m x T.
    Eigen::MatrixXd predict(const KernelInputs& at) const;
    /// Predictions at the training inputs.
    Eigen::MatrixXd fitted() const;

private:
    KernelInputs train_;
    InputKernel kernel_;
    std::optional<GramMatrix> output_;
    double lambda_;
    Grid grid_;
    Eigen::MatrixXd alpha_;
};

/**
 * Solves (K ⊗ K_Y + lambda I) vec(alpha) = vec(Y) through the eigendecompositions
 * of K and K_Y. Throws DomainError when lambda <= 0 and NumericalError on a
 * non-finite solution.
 */
KrrModel krr_fit(const KernelInputs& inputs, const Eigen::MatrixXd& outcomes, const Grid& grid,
                 const InputKernel& kernel, const std::optional<GramMatrix>& output, double lambda);
KrrModel krr_fit(const Dataset& ds, const InputKernel& kernel, const std::optional<GramMatrix>& output, double lambda);

/// Mean over training covariates of the prediction at treatment x.
Curve potential_outcome(const KrrModel& model, double x);

/// potential_outcome(x1) - potential_outcome(x0) with its norm under `metric`.
DynamicEffect kernel_dynamic_effect(const KrrModel& model, Metric metric, double x1 = 1.0, double x0 = 0.0);

struct DoseResponseCurve {
    std::vector<double> levels;
    std::vector<double> effects;
    std::vector<Curve> curves;   ///< potential_outcome per level
};

/// Norm of potential_outcome per level. Euclidean uses the L2 norm, FisherRaoSrsf the norm of the SRSF.
DoseResponseCurve dose_response(const KrrModel& model, const std::vector<double>& levels, Metric metric);

enum class OutputMode {
    Identity,   ///< independent regression per grid point
    Operator,   ///< squared-exponential output Gram over the grid
};

struct TuningGrid {
    std::vector<double> lambdas{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::vector<double> bandwidth_multipliers{0.5, 1.0, 2.0};
    std::vector<double> output_multipliers{0.5, 1.0, 2.0};
    double holdout = 0.2;
    std::uint64_t seed = 0;
};

struct KernelEstimatorOptions {
    OutputMode output = OutputMode::Operator;
    std::optional<double> lambda;               ///< skip the search when set
    std::optional<double> bandwidth_multiplier; ///< defaults to 1 with a fixed lambda
    std::optional<double> output_multiplier;
    TuningGrid tuning;
    Metric metric = Metric::Euclidean;
};

/**
 * Median-heuristic kernels for the inputs scaled by `multiplier`. Binary
 * treatments get the indicator kernel, other treatments a squared-exponential
 * kernel; covariate curves get the Fisher-Rao Gaussian kernel.
 */
InputKernel heuristic_kernel(const KernelInputs& inputs, double multiplier);

struct Hyperparameters {
    InputKernel kernel;
    std::optional<double> output_lengthscale;
    double lambda = 1.0;
    double holdout_mse = 0.0;   ///< 0 when no search ran
};

/// Holdout grid search when options.lambda is unset, otherwise the fixed choice.
Hyperparameters select_hyperparameters(const KernelInputs& inputs, const Eigen::MatrixXd& outcomes, const Grid& grid,
                                       const KernelEstimatorOptions& options);

/// Hyperparameter selection followed by a fit on all units.
KrrModel fit_kernel_model(const Dataset& ds, const KernelEstimatorOptions& options);

struct IterativeOptions {
    KernelEstimatorOptions kernel;
    std::size_t max_iter = 10;
    double tol = 1e-4;
    KarcherOptions karcher;
};

struct IterativeResult {
    KrrModel model;
    Dataset registered;
    std::vector<double> trace;   ///< RMS change of the training predictions per iteration
    std::size_t iterations = 0;
    bool converged = false;
};

/// Outcomes, and covariate curves when present, replaced by their registration to the Karcher mean.
Dataset register_dataset(const Dataset& ds, bool outcomes, bool covariates, const KarcherOptions& options = {},
                         std::size_t passes = 1);

/**
 * Alternates registration of covariate curves and outcomes to their Karcher
 * means with a kernel fit on the registered data, until the training
 * predictions change by less than options.tol or max_iter passes ran.
 */
IterativeResult iterative_srvf_estimate(const Dataset& ds, const IterativeOptions& options = {});

}  // namespace funcause
