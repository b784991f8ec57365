#pragma once

// Seeded randomness. Uniforms are built from raw mt19937_64 output so the
// stream does not depend on the standard library's distribution classes.

#include <cmath>
#include <cstdint>
#include <random>

#include "nehari/radial_grid.hpp"

namespace nehari {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Log-uniform in [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

struct GaussianField {
    double width = 1.0;
    double amplitude = 1.0;
};

/// Width in [0.3, 3], amplitude in [0.1, 10].
inline GaussianField random_gaussian(Rng& rng)
{
    const double width = rng.uniform(0.3, 3.0);
    const double amplitude = rng.uniform(0.1, 10.0);
    return {width, amplitude};
}

inline RadialField sample_gaussian(const GridPtr& grid, const GaussianField& g)
{
    const double inv = 1.0 / (2.0 * g.width * g.width);
    return RadialField::sample(grid, [&](double r) { return g.amplitude * std::exp(-r * r * inv); });
}

} // namespace nehari
