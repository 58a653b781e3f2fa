#pragma once

#include <optional>
#include <span>
#include <string>

#include "funcause/elastic.hpp"
#include "funcause/fdata.hpp"

namespace funcause {

enum class KernelFamily {
    SquaredExponential,
    BinaryIndicator,
    FisherRaoGaussian,
    Constant,  ///< k = 1, the long-lengthscale limit of SquaredExponential
};

struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    double scale = 1.0;  ///< lengthscale for SquaredExponential, zeta for FisherRaoGaussian

    static KernelSpec squared_exponential(double lengthscale);
    static KernelSpec binary();
    static KernelSpec fisher_rao(double zeta);
    static KernelSpec constant();

    /// Throws DomainError on a non-positive scale where one is used.
    void validate() const;
};

std::string describe(const KernelSpec& spec);

/// Symmetric kernel matrix with the spec that produced it.
class GramMatrix {
public:
    GramMatrix(Eigen::MatrixXd entries, std::string provenance);

    const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    const std::string& provenance() const noexcept { return provenance_; }
    Eigen::Index rows() const noexcept { return entries_.rows(); }

    double min_eigenvalue() const;
    double max_eigenvalue() const;
    /// min eigenvalue >= -1e-8 * max(1, max eigenvalue)
    bool is_psd() const;

private:
    Eigen::MatrixXd entries_;
    std::string provenance_;
};

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lengthscale);
double binary_kernel(double x, double y);
double fr_kernel(const Curve& f, const Curve& g, double zeta);

/**
 * Median of pairwise distances. Falls back to the mean positive distance when
 * the median is 0, and to 1 when every distance is 0. Rows are points.
 */
double median_heuristic(const Eigen::MatrixXd& points);
/// Same rule with fr_distance_srsf between curves.
double median_heuristic(std::span<const Curve> curves);

/// Kernel on (treatment, covariates[, covariate curve]) as a product of factors.
struct InputKernel {
    KernelSpec treatment = KernelSpec::binary();
    KernelSpec covariates = KernelSpec::squared_exponential(1.0);
    std::optional<KernelSpec> curves;  ///< used only when the inputs carry covariate curves
};

/// Kernel arguments for a set of units. Curve SRSFs are cached for the Fisher-Rao kernel.
struct KernelInputs {
    Eigen::VectorXd treatment;
    Eigen::MatrixXd covariates;   ///< n x d
    Eigen::MatrixXd curves;       ///< n x Tc, empty without covariate curves
    Eigen::MatrixXd curve_srsf;   ///< n x Tc
    std::optional<Grid> curve_grid;

    std::size_t size() const noexcept { return static_cast<std::size_t>(treatment.size()); }
    bool has_curves() const noexcept { return curve_grid.has_value(); }

    static KernelInputs from_dataset(const Dataset& ds);
    /// Same covariates with every treatment replaced by `x`.
    KernelInputs with_treatment(double x) const;
};

/// k(a_i, b_j) for all pairs.
Eigen::MatrixXd cross_kernel(const KernelInputs& a, const KernelInputs& b, const InputKernel& kernel);

GramMatrix input_gram(const Dataset& ds, const InputKernel& kernel);
GramMatrix input_gram(const KernelInputs& inputs, const InputKernel& kernel);

/// Squared-exponential kernel over grid points.
GramMatrix output_gram(const Grid& grid, double lengthscale);

/// Median-heuristic output lengthscale over the grid points.
double default_output_lengthscale(const Grid& grid);

}  // namespace funcause
