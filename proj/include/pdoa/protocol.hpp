#pragma once

// Measurement synthesis for the classical (frequency-hopping only) and the
// two-dimensional (time- and frequency-hopping) two-way phase protocols.
//
// In the 2-D protocol the sensor sends one message on carrier k and the anchor
// replies P times, the p-th reply delayed by dt(k, p) = p * dt / k. Column k of
// the P x N measurement matrix is the sensor-side phasor vector multiplied by
// the anchor-side phasor of the same carrier, which cancels the per-carrier
// phase offset delta(k).

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdoa/error.hpp"
#include "pdoa/model.hpp"
#include "pdoa/random.hpp"

namespace pdoa {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct ProtocolConfig {
    int n_freq = 10;    // N, carrier hops
    int p_time = 10;    // P, time epochs per carrier
    double dt = 80e-6;  // base time epoch, s

    /// `two_dimensional` requires P >= 2; the classical protocol only needs N.
    void validate(const SynthesizerConfig& synth, bool two_dimensional = true) const {
        detail::require(n_freq >= 2, "ProtocolConfig.n_freq must be >= 2");
        detail::require(n_freq <= synth.k_count,
                        "ProtocolConfig.n_freq must not exceed the synthesizer gain count K=" +
                            std::to_string(synth.k_count));
        detail::require(p_time >= (two_dimensional ? 2 : 1),
                        two_dimensional ? "ProtocolConfig.p_time must be >= 2 for the 2-D protocol"
                                        : "ProtocolConfig.p_time must be >= 1");
        detail::require(std::isfinite(dt) && dt > 0.0, "ProtocolConfig.dt must be > 0");
    }
};

/// Phases measured during one sensor->anchor->sensor exchange on carrier k,
/// anchor reply p.
struct PhaseExchange {
    int k = 1;
    int p = 1;
    double psi0 = 0.0;   // sensor side, rad
    double psi1 = 0.0;   // anchor side, rad
    double delta = 0.0;  // per-carrier phase offset, rad
    double mu = 0.0;     // carrier frequency offset f0(k) - f1(k), Hz
};

enum class SynthesisMode { idealized, physical };

struct MeasurementMatrix {
    ComplexMatrix entries;  // P x N; rows are time epochs, columns are carriers
    double df1 = 0.0;       // anchor-side carrier step, Hz
    double dt = 0.0;        // base time epoch, s
    bool noiseless = true;

    int p_time() const { return static_cast<int>(entries.rows()); }
    int n_freq() const { return static_cast<int>(entries.cols()); }
};

enum class NoiseModel { circular_gaussian, von_mises };

struct NoiseSpec {
    double snr_db = 10.0;  // +inf means noiseless
    NoiseModel model = NoiseModel::circular_gaussian;
    std::uint64_t seed = 1;

    bool is_noiseless() const { return std::isinf(snr_db) && snr_db > 0.0; }
    double snr_linear() const { return std::pow(10.0, snr_db / 10.0); }
    /// Total per-entry noise variance for a unit-amplitude signal.
    double noise_variance() const { return is_noiseless() ? 0.0 : std::pow(10.0, -snr_db / 10.0); }
};

/// dt(k, p) = p * dt / k.
inline double time_epoch(int k, int p, double dt) {
    detail::require(k >= 1 && p >= 1, "time_epoch: k and p must be >= 1");
    return static_cast<double>(p) * dt / static_cast<double>(k);
}

inline PhaseExchange two_way_phases(int k, int p, const ClockModel& clock, const SynthesizerConfig& synth,
                                    const ChannelParams& channel, const ProtocolConfig& cfg, double delta_k) {
    if (k < 1 || k > cfg.n_freq || k > synth.k_count) {
        throw InvalidArgument("two_way_phases: carrier index k=" + std::to_string(k) + " out of range");
    }
    if (p < 1 || p > cfg.p_time) {
        throw InvalidArgument("two_way_phases: epoch index p=" + std::to_string(p) + " out of range");
    }
    const double nu0 = derived_frequency(clock);
    const double f1 = carrier_frequency(synth, clock.nu1, k);
    const double f0 = carrier_frequency(synth, nu0, k);
    const double tau01 = channel.tau01();

    PhaseExchange ex;
    ex.k = k;
    ex.p = p;
    ex.delta = delta_k;
    // f0 - f1 = G(k) nu1 eta0, formed directly to avoid cancellation.
    ex.mu = carrier_frequency(synth, clock.nu1, k) * clock.eta0;
    const double epoch = time_epoch(k, p, cfg.dt);
    ex.psi0 = -kTwoPi * ex.mu * epoch - kTwoPi * f1 * tau01 - delta_k;
    ex.psi1 = -kTwoPi * f0 * tau01 + delta_k;
    return ex;
}

/// Classical protocol vector a(tau_eta) [1, e^{j2pi df1 tau_eta}, ..., e^{j2pi (N-1) df1 tau_eta}]^T.
inline ComplexVector classical_pdoa_vector(const ProtocolConfig& cfg, const ClockModel& clock,
                                           const SynthesizerConfig& synth, const ChannelParams& channel) {
    cfg.validate(synth, /*two_dimensional=*/false);
    const ModelPhasors ph = model_phasors(clock, synth, cfg.dt, channel);
    const double df1 = frequency_step(synth, clock.nu1);
    const double f1_first = carrier_frequency(synth, clock.nu1, 1);
    ComplexVector a(cfg.n_freq);
    for (int k = 0; k < cfg.n_freq; ++k) {
        a(k) = unit_phasor(kTwoPi * (f1_first + k * df1) * ph.tau_eta);
    }
    return a;
}

/// Noiseless P x N matrix.
///
/// idealized: the factorized model q h^T with q = a [1, phi, ..., phi^{P-1}]^T
/// and h = [1, gamma, ..., gamma^{N-1}]^T.
/// physical: each column built from raw two-way phases with a fresh offset
/// delta(k) ~ U(-pi, pi] per carrier. Equal to the idealized model only when
/// G(1) == dG.
inline MeasurementMatrix synthesize_matrix(SynthesisMode mode, const ProtocolConfig& cfg, const ClockModel& clock,
                                           const SynthesizerConfig& synth, const ChannelParams& channel,
                                           Rng& rng) {
    cfg.validate(synth);
    const int P = cfg.p_time;
    const int N = cfg.n_freq;

    MeasurementMatrix m;
    m.entries.resize(P, N);
    m.df1 = frequency_step(synth, clock.nu1);
    m.dt = cfg.dt;
    m.noiseless = true;

    if (mode == SynthesisMode::idealized) {
        const ModelPhasors ph = model_phasors(clock, synth, cfg.dt, channel);
        for (int k = 0; k < N; ++k) {
            for (int p = 0; p < P; ++p) {
                // Build from phases rather than repeated products so every entry
                // carries a single rounding.
                m.entries(p, k) = ph.a_scalar * unit_phasor(p * ph.phi_arg + k * ph.gamma_arg);
            }
        }
        return m;
    }

    for (int k = 1; k <= N; ++k) {
        const double delta_k = rng.uniform_phase();
        const Complex anchor_ref = unit_phasor(-two_way_phases(k, 1, clock, synth, channel, cfg, delta_k).psi1);
        for (int p = 1; p <= P; ++p) {
            const PhaseExchange ex = two_way_phases(k, p, clock, synth, channel, cfg, delta_k);
            m.entries(p - 1, k - 1) = anchor_ref * unit_phasor(-ex.psi0);
        }
    }
    return m;
}

/// M = A + N. Gaussian mode: i.i.d. CN(0, sigma^2), sigma^2 = 10^{-snr_db/10}.
/// von Mises mode: each entry rotated by a von Mises angle with kappa = 2 SNR.
inline MeasurementMatrix add_noise(const MeasurementMatrix& a, const NoiseSpec& spec, Rng& rng) {
    detail::require(!std::isnan(spec.snr_db), "NoiseSpec.snr_db must not be NaN");
    detail::require(!(std::isinf(spec.snr_db) && spec.snr_db < 0.0), "NoiseSpec.snr_db must not be -inf");
    MeasurementMatrix m = a;
    if (spec.is_noiseless()) return m;

    m.noiseless = false;
    if (spec.model == NoiseModel::circular_gaussian) {
        const double s = std::sqrt(spec.noise_variance() / 2.0);
        for (Eigen::Index k = 0; k < m.entries.cols(); ++k) {
            for (Eigen::Index p = 0; p < m.entries.rows(); ++p) {
                const double re = rng.normal();
                const double im = rng.normal();
                m.entries(p, k) += Complex(s * re, s * im);
            }
        }
    } else {
        const double kappa = 2.0 * spec.snr_linear();
        for (Eigen::Index k = 0; k < m.entries.cols(); ++k) {
            for (Eigen::Index p = 0; p < m.entries.rows(); ++p) {
                m.entries(p, k) *= unit_phasor(rng.von_mises(kappa));
            }
        }
    }
    return m;
}

inline MeasurementMatrix add_noise(const MeasurementMatrix& a, const NoiseSpec& spec) {
    Rng rng(spec.seed);
    return add_noise(a, spec, rng);
}

/// Same noise process applied to a classical protocol vector.
inline ComplexVector add_noise(const ComplexVector& a, const NoiseSpec& spec, Rng& rng) {
    MeasurementMatrix tmp;
    tmp.entries = a;
    return add_noise(tmp, spec, rng).entries.col(0);
}

}  // namespace pdoa
