#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "funcause/effect.hpp"
#include "funcause/fdata.hpp"

namespace funcause {

enum class Scenario {
    BinaryNonmonotonic,    ///< Y = mu0 + beta X + covariate term + noise
    BinaryMonotonic,       ///< Y = cumulative sum over the grid of the same process
    ContinuousFunctional,  ///< continuous X with a covariate curve driving the baseline arc
};

std::string_view to_string(Scenario s);
/// Accepts "nonmonotonic", "monotonic" and "continuous"; throws DomainError otherwise.
Scenario scenario_from_string(std::string_view name);

struct ScenarioConfig {
    std::size_t n = 100;
    std::size_t T = 100;
    Scenario scenario = Scenario::BinaryNonmonotonic;
    double amplitude = 1.0;
    std::array<double, 3> centers{0.25, 0.5, 0.75};
    double width = 0.05;
    double noise = 0.1;
    double shift = 0.05;         ///< peak shifts are uniform on [-shift, shift]
    double confounding = 1.0;
    std::uint64_t seed = 0;
    std::size_t covariate_dim = 3;
    double mu0_scale = 0.5;      ///< mu0(t) = baseline_offset + mu0_scale sin(2 pi t)
    double baseline_offset = 0.0;
    double covariate_effect = 0.5;

    /// Throws DomainError unless T >= 8, width > 0, noise >= 0, shift in [0, 0.2] and n >= 2.
    void validate() const;
};

struct GroundTruth {
    Scenario scenario = Scenario::BinaryNonmonotonic;
    Curve beta_x;          ///< unshifted treatment effect function
    Curve effect;          ///< effect of X on the outcome curve: beta_x, or its cumulative sum when monotonic
    double true_phi_dATE = 0.0;   ///< L2 norm of beta_x
    double dose_slope = 0.0;      ///< L2 norm of d phi(x) / dx, equal to true_phi_dATE here
};

struct Simulation {
    Dataset data;
    GroundTruth truth;
};

/// Sum of three Gaussian peaks of height `amplitude` at the centers, shifted by `offset`.
Curve peak_function(const Grid& grid, double amplitude, const std::array<double, 3>& centers, double width,
                    double offset = 0.0);

/// Deterministic given cfg.seed.
Simulation generate(const ScenarioConfig& cfg);

struct EffectError {
    double mae = 0.0;
    Curve per_t;   ///< |delta(t) - effect(t)|
};

/// Throws DomainError on a grid mismatch.
EffectError effect_error(const DynamicEffect& estimate, const GroundTruth& truth);

}  // namespace funcause
