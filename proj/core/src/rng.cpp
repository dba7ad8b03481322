#include "mpfield/rng.hpp"

#include <cmath>
#include <numbers>

namespace mpfield {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL))) {}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (spare_) {
        const double out = *spare_;
        spare_.reset();
        return out;
    }
    double u = 0.0;
    do {
        u = uniform();
    } while (u == 0.0);
    const double v = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u));
    const double angle = 2.0 * std::numbers::pi * v;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

std::complex<double> Rng::complex_normal(double variance) {
    const double scale = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {scale * re, scale * im};
}

}  // namespace mpfield
