#pragma once

#include "funcause/effect.hpp"
#include "funcause/fdata.hpp"

namespace funcause {

inline constexpr double kDefaultClip = 0.01;

/// Logistic propensity model with the intercept first; predictions are clipped.
struct PropensityModel {
    Eigen::VectorXd coefficients;
    double clip_eps = kDefaultClip;

    double predict(const Eigen::VectorXd& v) const;
    Eigen::VectorXd predict_rows(const Eigen::MatrixXd& v) const;  ///< one row per unit

    /// Model that predicts `p` for every unit with covariate dimension d.
    static PropensityModel constant(double p, std::size_t d, double clip_eps = kDefaultClip);
};

/**
 * IRLS fit of the logistic model minimizing the mean negative log-likelihood
 * plus (l2 / 2) times the squared norm of the slopes. The intercept is not
 * penalized. Stops when no coefficient moves by 1e-8 or after 100 steps.
 */
PropensityModel fit_propensity(const Dataset& ds, double l2 = 1e-4, double clip_eps = kDefaultClip);

/// Per-grid-point ridge regressions of Y(t) on (1, V) for each arm; rows are (intercept, slopes).
struct OutcomeModel {
    Eigen::MatrixXd treated;  ///< (d + 1) x T
    Eigen::MatrixXd control;  ///< (d + 1) x T
    double ridge = 1e-6;

    /// n x T predictions for arm 0 or 1.
    Eigen::MatrixXd predict(int arm, const Eigen::MatrixXd& v) const;
};

OutcomeModel fit_outcome_models(const Dataset& ds, double ridge = 1e-6);

/// Horvitz-Thompson IPW contrast at every grid point.
DynamicEffect ipw_effect(const Dataset& ds, const PropensityModel& pm);

/// Augmented IPW contrast at every grid point.
DynamicEffect dr_effect(const Dataset& ds, const PropensityModel& pm, const OutcomeModel& om);

}  // namespace funcause
