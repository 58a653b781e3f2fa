#include "funcause/simgen.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "funcause/random.hpp"

namespace funcause {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kArcWidth = 0.15;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double arc(double t, double height, double location) {
    const double u = (t - location) / kArcWidth;
    return height * std::exp(-0.5 * u * u);
}

std::string unit_id(std::size_t i) {
    std::string digits = std::to_string(i + 1);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return "s" + digits;
}

Eigen::VectorXd cumulative_sum(const Eigen::VectorXd& z) {
    Eigen::VectorXd out(z.size());
    double acc = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) out[k] = acc += z[k];
    return out;
}

ObservationalSample binary_unit(const ScenarioConfig& cfg, const Grid& grid, std::size_t i, std::uint64_t stream) {
    Rng rng(cfg.seed, stream);
    Eigen::VectorXd v(static_cast<Eigen::Index>(cfg.covariate_dim));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rng.normal();
    const double vbar = v.size() > 0 ? v.mean() : 0.0;
    const double x = rng.bernoulli(logistic(cfg.confounding * vbar)) ? 1.0 : 0.0;
    const double s = rng.uniform(-cfg.shift, cfg.shift);
    const Curve beta = peak_function(grid, cfg.amplitude, cfg.centers, cfg.width, s);
    Eigen::VectorXd z(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        z[static_cast<Eigen::Index>(k)] = cfg.baseline_offset + cfg.mu0_scale * std::sin(2.0 * kPi * t) +
                                          beta[k] * x + cfg.confounding * cfg.covariate_effect * (0.5 + t) * vbar +
                                          cfg.noise * rng.normal();
    }
    if (cfg.scenario == Scenario::BinaryMonotonic) z = cumulative_sum(z);
    return {unit_id(i), x, std::move(v), std::nullopt, Curve(grid, std::move(z))};
}

ObservationalSample continuous_unit(const ScenarioConfig& cfg, const Grid& grid, std::size_t i, std::uint64_t stream) {
    Rng rng(cfg.seed, stream);
    double vbar = 0.0;
    for (std::size_t k = 0; k < cfg.covariate_dim; ++k) vbar += rng.normal();
    if (cfg.covariate_dim > 0) vbar /= static_cast<double>(cfg.covariate_dim);
    const double a = cfg.confounding * vbar;
    const double x = std::abs(rng.normal(1.0 + 0.25 * a, 0.5));
    const double sv = rng.uniform(-cfg.shift, cfg.shift);
    const double sy = rng.uniform(-cfg.shift, cfg.shift);
    const Curve beta = peak_function(grid, cfg.amplitude, cfg.centers, cfg.width, sy);
    Eigen::VectorXd vc(static_cast<Eigen::Index>(grid.size())), y(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        const auto kk = static_cast<Eigen::Index>(k);
        vc[kk] = arc(t, 1.0 + 0.5 * vbar, 0.5 + 0.1 * vbar + sv);
        y[kk] = arc(t, 1.0 + cfg.covariate_effect * a, 0.5 + 0.1 * a + sy) + beta[k] * x + cfg.noise * rng.normal();
    }
    return {unit_id(i), x, Eigen::VectorXd(), Curve(grid, std::move(vc)), Curve(grid, std::move(y))};
}

}  // namespace

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::BinaryNonmonotonic: return "nonmonotonic";
        case Scenario::BinaryMonotonic: return "monotonic";
        case Scenario::ContinuousFunctional: return "continuous";
    }
    return "nonmonotonic";
}

Scenario scenario_from_string(std::string_view name) {
    if (name == "nonmonotonic") return Scenario::BinaryNonmonotonic;
    if (name == "monotonic") return Scenario::BinaryMonotonic;
    if (name == "continuous") return Scenario::ContinuousFunctional;
    throw DomainError("unknown scenario '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
    if (n < 2) throw DomainError("n must be at least 2");
    if (T < 8) throw DomainError("T must be at least 8");
    if (!(width > 0.0)) throw DomainError("peak width must be positive");
    if (!(noise >= 0.0)) throw DomainError("noise must be nonnegative");
    if (!(shift >= 0.0 && shift <= 0.2)) throw DomainError("shift must be in [0, 0.2]");
    if (!std::isfinite(amplitude) || !std::isfinite(confounding) || !std::isfinite(mu0_scale) ||
        !std::isfinite(baseline_offset) || !std::isfinite(covariate_effect))
        throw DomainError("scenario parameters must be finite");
}

Curve peak_function(const Grid& grid, double amplitude, const std::array<double, 3>& centers, double width,
                    double offset) {
    return Curve::from_function(grid, [&](double t) {
        double v = 0.0;
        for (double c : centers) {
            const double u = (t - c - offset) / width;
            v += amplitude * std::exp(-0.5 * u * u);
        }
        return v;
    });
}

Simulation generate(const ScenarioConfig& cfg) {
    cfg.validate();
    const Grid grid = Grid::uniform(cfg.T);
    const bool binary = cfg.scenario != Scenario::ContinuousFunctional;
    std::vector<ObservationalSample> samples;
    for (std::uint64_t attempt = 0;; ++attempt) {
        samples.clear();
        std::size_t treated = 0;
        for (std::size_t i = 0; i < cfg.n; ++i) {
            const std::uint64_t stream = attempt * cfg.n + i;
            samples.push_back(binary ? binary_unit(cfg, grid, i, stream) : continuous_unit(cfg, grid, i, stream));
            treated += samples.back().treatment == 1.0 ? 1 : 0;
        }
        // Redraw the rare samples with an empty arm.
        if (!binary || (treated > 0 && treated < cfg.n)) break;
    }

    Curve beta = peak_function(grid, cfg.amplitude, cfg.centers, cfg.width);
    Curve effect = cfg.scenario == Scenario::BinaryMonotonic ? Curve(grid, cumulative_sum(beta.values())) : beta;
    const double norm = l2_norm(beta);
    return {Dataset(std::move(samples)), GroundTruth{cfg.scenario, std::move(beta), std::move(effect), norm, norm}};
}

EffectError effect_error(const DynamicEffect& estimate, const GroundTruth& truth) {
    if (!(estimate.delta.grid() == truth.effect.grid())) throw DomainError("estimate and truth grids differ");
    Eigen::VectorXd err = (estimate.delta.values() - truth.effect.values()).cwiseAbs();
    const double mae = err.mean();
    return {mae, Curve(truth.effect.grid(), std::move(err))};
}

}  // namespace funcause
