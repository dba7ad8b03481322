#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <random>

namespace mpfield {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Per-trial random stream. The engine is std::mt19937_64 seeded with
// splitmix64(seed ^ splitmix64(stream + 0x9e3779b97f4a7c15)), so trial t of a
// run with seed s draws the same numbers whichever thread executes it.
// Uniforms and normals are derived from raw 64-bit outputs (53-bit mantissa,
// Box-Muller), not from <random> distributions, whose algorithms are
// implementation-defined.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform();

    // Standard normal.
    double normal();

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance);

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

}  // namespace mpfield
