#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace funcause {

/// mt19937_64 keyed by (seed, stream) with platform-independent draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal by the Box-Muller transform.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

}  // namespace funcause
