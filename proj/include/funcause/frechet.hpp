#pragma once

#include <span>

#include "funcause/classical.hpp"
#include "funcause/effect.hpp"
#include "funcause/elastic.hpp"

namespace funcause {

struct FrechetMeanResult {
    Curve mean;
    Metric metric = Metric::Euclidean;
    double objective = 0.0;  ///< weighted mean squared distance, weights normalized to sum 1
    bool converged = true;
};

struct FrechetOptions {
    KarcherOptions karcher;
    std::size_t sphere_max_iter = 500;
    double sphere_tol = 1e-8;
};

/// Weighted Fréchet mean; empty weights mean uniform. All-zero weights throw WeightError.
FrechetMeanResult frechet_mean(std::span<const Curve> curves, std::span<const double> weights, Metric metric,
                               const FrechetOptions& options = {});

/**
 * Weighted mean squared distance from `candidate` to the curves. The
 * Fisher-Rao SRSF variant uses the aligned (elastic) distance, which is what
 * the Karcher mean minimizes.
 */
double frechet_objective(std::span<const Curve> curves, std::span<const double> weights, Metric metric,
                         const Curve& candidate, const AlignOptions& align = {});

enum class Weighting { Uniform, InversePropensity };

struct PotentialOutcomes {
    FrechetMeanResult treated;
    FrechetMeanResult control;
};

/// Per-arm Fréchet means; InversePropensity needs `propensity`.
PotentialOutcomes group_potential_outcomes(const Dataset& ds, Metric metric, Weighting weighting,
                                           const PropensityModel* propensity = nullptr,
                                           const FrechetOptions& options = {});

DynamicEffect dynamic_effect(const FrechetMeanResult& f1, const FrechetMeanResult& f0, Metric metric);

}  // namespace funcause
