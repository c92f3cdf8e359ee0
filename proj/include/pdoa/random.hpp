#pragma once

// Seeded random streams.
//
// Every Monte Carlo trial owns an independent stream whose seed is derived by
// SplitMix64 mixing of (master seed, coordinates...). The engine is
// std::mt19937_64, whose output sequence is fixed by the standard; the
// uniform/normal/von Mises transforms are implemented here rather than via
// <random> distributions so that results do not depend on the standard-library
// vendor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace pdoa {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a seed and a list of coordinates.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c));
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform on (-pi, pi].
    double uniform_phase() { return std::numbers::pi * (1.0 - 2.0 * uniform()); }

    /// Standard normal (Box-Muller; one value per call, the pair partner is cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open_low()));
        const double t = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Zero-mean von Mises angle with concentration kappa (Best & Fisher, 1979).
    double von_mises(double kappa) {
        if (kappa <= 0.0) return uniform_phase();
        // Beyond this the distribution is indistinguishable from N(0, 1/kappa)
        // and acos() below loses resolution near f = 1.
        if (kappa > 1e7) return normal() / std::sqrt(kappa);
        const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
        const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
        const double r = (1.0 + rho * rho) / (2.0 * rho);
        for (;;) {
            const double z = std::cos(std::numbers::pi * uniform());
            const double f = (1.0 + r * z) / (r + z);
            const double c = kappa * (r - f);
            const double u2 = uniform_open_low();
            if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
                const double theta = std::acos(std::clamp(f, -1.0, 1.0));
                return uniform() < 0.5 ? -theta : theta;
            }
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pdoa
