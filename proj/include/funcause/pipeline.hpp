#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "funcause/classical.hpp"
#include "funcause/estimators.hpp"
#include "funcause/frechet.hpp"
#include "funcause/inference.hpp"

namespace funcause {

enum class EstimatorKind {
    Ipw,
    Dr,
    FrechetEuclid,
    FrechetFr,
    Kernel,              ///< K_Y = identity
    OperatorKernel,      ///< K_Y = output_gram
    SrvfOperatorKernel,  ///< outcomes registered to their Karcher mean first
    IterativeSrvf,
};

std::string_view to_string(EstimatorKind k);
/// Accepts the names listed by all_estimators; throws DomainError otherwise.
EstimatorKind estimator_from_string(std::string_view name);
const std::vector<EstimatorKind>& all_estimators();

/// True for estimators that accept continuous treatments.
bool supports_continuous(EstimatorKind k);

struct EstimateOptions {
    KernelEstimatorOptions kernel;   ///< output mode is set per estimator
    std::size_t max_iter = 10;       ///< iterative-srvf
    double tol = 1e-4;               ///< iterative-srvf
    KarcherOptions karcher;
    FrechetOptions frechet;
    double propensity_l2 = 1e-4;
    double clip = kDefaultClip;
    double ridge = 1e-6;
    Metric metric = Metric::Euclidean;
    double x1 = 1.0;                 ///< contrast levels for kernel estimators
    double x0 = 0.0;
    std::optional<double> ci_level;  ///< binary treatments only
};

struct EffectEstimate {
    DynamicEffect effect;
    std::string estimator;
    std::optional<EffectCI> ci;
    std::map<std::string, std::string> metadata;
};

/**
 * Runs one estimator. The classical and Fréchet estimators need binary
 * treatments and throw DomainError otherwise; kernel estimators report
 * potential_outcome(x1) - potential_outcome(x0).
 */
EffectEstimate estimate(const Dataset& ds, EstimatorKind kind, const EstimateOptions& options = {});

}  // namespace funcause
