#pragma once

// Clock, frequency-synthesizer and channel-phase models for a two-node
// (anchor + sensor) phase-based ranging link.
//
// The anchor oscillator runs at nu1; the sensor oscillator runs at
// nu0 = nu1 * (1 + eta0). Both nodes share a synthesizer with K equispaced
// rational gains G(k) = G(1) + (k - 1) * dG, so the k-th carrier of node i is
// f_i(k) = G(k) * nu_i and the carrier step is df_i = dG * nu_i.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>

#include <boost/rational.hpp>

#include "pdoa/error.hpp"

namespace pdoa {

using Complex = std::complex<double>;
using Rational = boost::rational<std::int64_t>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Reduces a phase to (-pi, pi].
inline double wrap_phase(double x) {
    double r = std::remainder(x, kTwoPi);
    if (r <= -std::numbers::pi) r += kTwoPi;
    return r;
}

/// Unit phasor e^{j x}.
inline Complex unit_phasor(double x) { return std::polar(1.0, x); }

struct ClockModel {
    double nu1 = 32.0e6;  // anchor oscillator, Hz
    double eta0 = 0.0;    // sensor skew, dimensionless (80 ppm == 8e-5)

    void validate() const {
        detail::require(std::isfinite(nu1) && nu1 > 0.0, "ClockModel.nu1 must be > 0");
        detail::require(std::isfinite(eta0) && std::abs(eta0) < 1e-2,
                        "ClockModel.eta0 must satisfy |eta0| < 1e-2");
    }
};

struct SynthesizerConfig {
    std::int64_t g1_num = 1;
    std::int64_t g1_den = 64;
    std::int64_t dg_num = 1;
    std::int64_t dg_den = 64;
    int k_count = 128;

    Rational first_gain() const { return Rational(g1_num, g1_den); }
    Rational gain_step() const { return Rational(dg_num, dg_den); }

    /// G(k) = G(1) + (k - 1) dG, exact.
    Rational gain(int k) const { return first_gain() + Rational(k - 1) * gain_step(); }

    void validate() const {
        detail::require(g1_den != 0 && dg_den != 0, "SynthesizerConfig: denominators must be nonzero");
        detail::require(k_count >= 1, "SynthesizerConfig.k_count must be >= 1");
        // Gains are affine in k, so checking both ends covers the ladder.
        detail::require(gain(1) > 0 && gain(k_count) > 0,
                        "SynthesizerConfig: all gains G(k), k=1..K, must be positive");
    }
};

struct ChannelParams {
    double d01 = 0.0;            // m
    double c = kSpeedOfLight;    // m/s
    double alpha = 1.0;          // attenuation magnitude; phase-only model

    double tau01() const { return d01 / c; }

    void validate() const {
        detail::require(std::isfinite(d01) && d01 >= 0.0, "ChannelParams.d01 must be >= 0");
        detail::require(std::isfinite(c) && c > 0.0, "ChannelParams.c must be > 0");
    }
};

/// The three generating phasors of the noiseless factorized model
///   A[p, k] = a_scalar * phi^(p-1) * gamma^(k-1).
struct ModelPhasors {
    Complex a_scalar{1.0, 0.0};
    Complex phi{1.0, 0.0};
    Complex gamma{1.0, 0.0};
    double tau_eta = 0.0;  // s
    double phi_arg = 0.0;    // reduced to (-pi, pi]
    double gamma_arg = 0.0;  // reduced to (-pi, pi]
    bool aliased = false;    // true if arg(phi) or arg(gamma) wrapped during reduction
};

/// nu0 = nu1 (1 + eta0).
inline double derived_frequency(const ClockModel& clock) {
    clock.validate();
    return clock.nu1 * (1.0 + clock.eta0);
}

/// f(k) = G(k) * osc_freq, with G(k) evaluated exactly before the single
/// floating-point conversion.
inline double carrier_frequency(const SynthesizerConfig& synth, double osc_freq, int k) {
    synth.validate();
    if (k < 1 || k > synth.k_count) {
        throw InvalidArgument("carrier_frequency: k=" + std::to_string(k) + " outside 1.." +
                              std::to_string(synth.k_count));
    }
    const Rational g = synth.gain(k);
    return osc_freq * static_cast<double>(g.numerator()) / static_cast<double>(g.denominator());
}

/// df = dG * osc_freq.
inline double frequency_step(const SynthesizerConfig& synth, double osc_freq) {
    synth.validate();
    const Rational dg = synth.gain_step();
    return osc_freq * static_cast<double>(dg.numerator()) / static_cast<double>(dg.denominator());
}

/// tau_eta = eta0 dt + (2 + eta0) tau01: the composite delay seen by the
/// one-dimensional frequency-hopping protocol.
inline double composite_delay(double eta0, double dt, double tau01) {
    return eta0 * dt + (2.0 + eta0) * tau01;
}

inline ModelPhasors model_phasors(const ClockModel& clock, const SynthesizerConfig& synth, double dt,
                                  const ChannelParams& channel) {
    clock.validate();
    synth.validate();
    channel.validate();
    detail::require(std::isfinite(dt) && dt > 0.0, "model_phasors: dt must be > 0");

    const double df1 = frequency_step(synth, clock.nu1);
    const double f1_first = carrier_frequency(synth, clock.nu1, 1);
    const double tau01 = channel.tau01();

    ModelPhasors out;
    out.tau_eta = composite_delay(clock.eta0, dt, tau01);

    const double raw_phi = kTwoPi * df1 * clock.eta0 * dt;
    const double raw_gamma = kTwoPi * df1 * (2.0 + clock.eta0) * tau01;
    out.aliased = std::abs(raw_phi) > std::numbers::pi || std::abs(raw_gamma) > std::numbers::pi;
    out.phi_arg = wrap_phase(raw_phi);
    out.gamma_arg = wrap_phase(raw_gamma);

    out.a_scalar = unit_phasor(kTwoPi * f1_first * out.tau_eta);
    out.phi = unit_phasor(out.phi_arg);
    out.gamma = unit_phasor(out.gamma_arg);
    return out;
}

}  // namespace pdoa
