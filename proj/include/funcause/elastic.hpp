#pragma once

#include <optional>
#include <span>
#include <vector>

#include "funcause/fdata.hpp"

namespace funcause {

/// Square-root slope function q = sign(f') sqrt|f'| with the starting value f(0).
class SrsfCurve {
public:
    SrsfCurve(Grid grid, Eigen::VectorXd values, double origin);

    const Grid& grid() const noexcept { return grid_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }
    double origin() const noexcept { return origin_; }
    std::size_t size() const noexcept { return grid_.size(); }

private:
    Grid grid_;
    Eigen::VectorXd values_;
    double origin_;
};

/// Boundary-fixed, strictly increasing reparameterization of [0, 1].
class WarpingFunction {
public:
    /// Throws DomainError unless values start at exactly 0, end at exactly 1 and increase strictly.
    WarpingFunction(Grid grid, Eigen::VectorXd values);

    static WarpingFunction identity(const Grid& grid);

    const Grid& grid() const noexcept { return grid_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return grid_.size(); }

    /// Largest |gamma(t) - t| over the grid, in grid cells.
    double max_deviation_cells() const;

private:
    Grid grid_;
    Eigen::VectorXd values_;
};

SrsfCurve srsf_transform(const Curve& f, std::size_t smoothing_window = 0);

/// f(t) = origin + cumulative trapezoid integral of q|q|.
Curve srsf_inverse(const SrsfCurve& q);

/// (q o gamma) sqrt(gamma'), with gamma' from the finite-difference derivative.
SrsfCurve warp_srsf(const SrsfCurve& q, const WarpingFunction& gamma);

/// f o gamma by linear interpolation.
Curve warp_curve(const Curve& f, const WarpingFunction& gamma);

/// a o b.
WarpingFunction compose(const WarpingFunction& a, const WarpingFunction& b);
WarpingFunction invert(const WarpingFunction& gamma);

struct AlignOptions {
    double penalty = 0.0;    ///< weight on the integral of (gamma' - 1)^2
    int slope_cap = 3;       ///< DP slopes restricted to [1/slope_cap, slope_cap]
};

struct Alignment {
    WarpingFunction warp;
    SrsfCurve aligned;       ///< (q2 o gamma) sqrt(gamma') along the optimal path
    double distance = 0.0;   ///< ||q1 - aligned||
};

/**
 * Dynamic-programming registration of q2 onto q1 over monotone lattice paths.
 * Among equal-cost paths the diagonal move wins, so equal inputs give the
 * identity warp.
 */
Alignment align_pair(const SrsfCurve& q1, const SrsfCurve& q2, const AlignOptions& options = {});

struct KarcherOptions {
    std::size_t max_iter = 20;
    double tol = 1e-6;          ///< relative objective decrease
    AlignOptions align;
    bool center_warps = true;   ///< make the average warp the identity
};

struct KarcherResult {
    Curve mean;
    SrsfCurve mean_srsf;
    std::vector<WarpingFunction> warps;     ///< input i is registered as f_i o warps[i]
    std::vector<double> objective_trace;    ///< weighted mean squared distance per iteration
    bool converged = false;
};

/// Weighted Karcher mean under the elastic metric. Empty weights mean uniform.
KarcherResult karcher_mean(std::span<const Curve> curves, const KarcherOptions& options = {},
                           std::span<const double> weights = {});

struct Registration {
    std::vector<Curve> curves;              ///< f_i o warps[i]
    std::vector<WarpingFunction> warps;
    Curve mean;
    bool converged = false;                 ///< Karcher iteration converged on the last pass
    std::size_t passes = 0;
};

/**
 * Karcher mean of the curves, then each curve aligned to it with align_pair.
 * With passes > 1 the registration is repeated on its own output until every
 * warp is the identity; warps are composed across passes.
 */
Registration register_curves(std::span<const Curve> curves, const KarcherOptions& options = {},
                             std::size_t passes = 1);

/// ||q_f - q_g|| without alignment.
double fr_distance_srsf(const Curve& f, const Curve& g);
double fr_distance_srsf(const SrsfCurve& qf, const SrsfCurve& qg);

/// 2 arccos(sum sqrt(p_j r_j)) on nonnegative vectors with sums at most 1.
double fr_distance_sphere(const Curve& p, const Curve& r);
double fr_distance_sphere(const Eigen::VectorXd& p, const Eigen::VectorXd& r);

}  // namespace funcause
