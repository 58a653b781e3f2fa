#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "funcause/fdata.hpp"

namespace funcause {

enum class CiRegime { NonzeroNorm, ZeroNorm };

std::string_view to_string(CiRegime r);

struct PointwiseCI {
    Curve lower;
    Curve upper;
};

struct EffectCI {
    double estimate = 0.0;   ///< L2 norm of delta_hat
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    CiRegime regime = CiRegime::NonzeroNorm;
    double sigma = 0.0;      ///< delta-method standard deviation (before dividing by sqrt(n))
    std::optional<PointwiseCI> pointwise;
};

/// Standard normal quantile; p must lie in (0, 1).
double normal_quantile(double p);
double normal_cdf(double x);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
/// Student-t CDF with `df` > 0 degrees of freedom.
double student_t_cdf(double t, double df);

/**
 * Distribution of sum_i lambda_i nu_i^2 with nu_i standard normal, sampled by
 * Monte-Carlo. Draws are split into fixed blocks with their own RNG streams,
 * so quantiles do not depend on the worker count.
 */
class GeneralizedChiSquare {
public:
    static constexpr std::size_t kDefaultDraws = 100000;
    static constexpr std::uint64_t kDefaultSeed = 20240611;

    /// Eigenvalues below `floor` are raised to it.
    explicit GeneralizedChiSquare(std::vector<double> eigenvalues, std::size_t draws = kDefaultDraws,
                                  std::uint64_t seed = kDefaultSeed, double floor = 1e-12);

    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    /// Linear interpolation between order statistics; p in [0, 1].
    double quantile(double p) const;

private:
    std::vector<double> eigenvalues_;
    std::vector<double> sorted_;
};

/**
 * n times the covariance of the arm-mean difference: n (S1 / n1 + S0 / n0)
 * with S_x the arm sample covariance of the outcome values. Needs a binary
 * treatment and at least two units per arm.
 */
Eigen::MatrixXd effect_covariance(const Dataset& ds);

/// delta_hat(t) -/+ z sqrt(K_tt / n).
PointwiseCI pointwise_ci(const Curve& delta_hat, const Eigen::VectorXd& k_diag, std::size_t n, double level = 0.95);

/**
 * Confidence interval for the L2 norm of the effect curve. The normal
 * interval is used when ||delta_hat|| > 2 sigma / sqrt(n) and n ||delta_hat||^2
 * exceeds the 0.99 quantile of its null distribution; otherwise the
 * interval comes from generalized chi-square quantiles. Needs n >= 10.
 */
EffectCI effect_ci(const Dataset& ds, const Curve& delta_hat, double level = 0.95);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;   ///< two-sided
};

/// Welch t-test with Satterthwaite degrees of freedom; each sample needs two values.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace funcause
