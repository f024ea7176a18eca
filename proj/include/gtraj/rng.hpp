// rng.hpp - Per-trajectory random streams.
//
// Trajectory k of a run seeded with master seed S draws from
//   std::mt19937_64(trajectory_seed(S, k))
// where trajectory_seed mixes S and k through two rounds of the SplitMix64
// finalizer:
//   trajectory_seed(S, k) = mix64(mix64(S) + 0x9E3779B97F4A7C15 * (k + 1))
// The streams are independent of worker count and scheduling order.
#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <random>

namespace gtraj {

constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index)
{
    return mix64(mix64(master_seed) + 0x9E3779B97F4A7C15ULL * (index + 1));
}

/// Gaussian source for complex Wiener increments dZ = (dW_x + i dW_p)/sqrt(2),
/// with dW_x, dW_p ~ N(0, dt), so that E|dZ|^2 = dt.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }

    std::complex<double> wiener(double dt)
    {
        const double scale = std::sqrt(0.5 * dt);
        const double x = normal_(engine_);
        const double p = normal_(engine_);
        return {scale * x, scale * p};
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace gtraj
