#pragma once

// Cramer-Rao lower bounds for joint skew/range estimation from the P x N
// measurement matrix in circular white Gaussian noise (SNR = 1 / sigma^2).
//
// Closed form:
//   var(eta) >= 6 / (SNR (2 pi df1 dt)^2 P N (P^2 - 1))
//   var(d)   >= 6 c^2 / (SNR (4 pi df1)^2 P N (N^2 - 1))
//
// fisher_numeric() builds the Fisher matrix directly from analytic derivatives
// of vec(A) and is used to cross-check the closed form.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "pdoa/error.hpp"
#include "pdoa/model.hpp"
#include "pdoa/protocol.hpp"

namespace pdoa {

struct CrlbResult {
    double var_eta = 0.0;  // dimensionless^2
    double var_d = 0.0;    // m^2
    double snr_linear = 0.0;
    int p_time = 0;
    int n_freq = 0;
    double df1 = 0.0;
    double dt = 0.0;

    double sigma_eta() const { return std::sqrt(var_eta); }
    double sigma_d() const { return std::sqrt(var_d); }
};

inline CrlbResult crlb_closed_form(double snr_db, double df1, double dt, int p_time, int n_freq,
                                   double c = kSpeedOfLight) {
    detail::require(p_time >= 2 && n_freq >= 2, "crlb_closed_form: P and N must be >= 2");
    detail::require(std::isfinite(snr_db), "crlb_closed_form: SNR must be finite");
    detail::require(df1 > 0.0 && dt > 0.0 && c > 0.0, "crlb_closed_form: df1, dt and c must be > 0");

    const double snr = std::pow(10.0, snr_db / 10.0);
    const double P = p_time;
    const double N = n_freq;
    const double w_eta = kTwoPi * df1 * dt;
    const double w_d = 2.0 * kTwoPi * df1;

    CrlbResult r;
    r.var_eta = 6.0 / (snr * w_eta * w_eta * P * N * (P * P - 1.0));
    r.var_d = 6.0 * c * c / (snr * w_d * w_d * P * N * (N * N - 1.0));
    r.snr_linear = snr;
    r.p_time = p_time;
    r.n_freq = n_freq;
    r.df1 = df1;
    r.dt = dt;
    return r;
}

/// Parameter order of the numeric Fisher matrix.
enum FisherParam { kEta = 0, kTau = 1, kCommonPhase = 2 };

/// Analytic derivatives d vec(A) / d theta, theta = (eta0, tau01, common phase),
/// as a PN x 3 matrix. vec() stacks columns (carrier-major).
inline ComplexMatrix model_jacobian(const ClockModel& clock, const SynthesizerConfig& synth,
                                    const ChannelParams& channel, const ProtocolConfig& cfg) {
    cfg.validate(synth);
    const ModelPhasors ph = model_phasors(clock, synth, cfg.dt, channel);
    const double df1 = frequency_step(synth, clock.nu1);
    const double f1_first = carrier_frequency(synth, clock.nu1, 1);
    const double tau = channel.tau01();
    const double eta = clock.eta0;
    const int P = cfg.p_time;
    const int N = cfg.n_freq;

    // Entry phase: 2pi f1(1) tau_eta + p 2pi df1 eta dt + k 2pi df1 (2 + eta) tau + psi.
    ComplexMatrix jac(static_cast<Eigen::Index>(P) * N, 3);
    for (int k = 0; k < N; ++k) {
        for (int p = 0; p < P; ++p) {
            const Complex a = ph.a_scalar * unit_phasor(p * ph.phi_arg + k * ph.gamma_arg);
            const double d_eta = kTwoPi * (f1_first * (cfg.dt + tau) + p * df1 * cfg.dt + k * df1 * tau);
            const double d_tau = kTwoPi * (2.0 + eta) * (f1_first + k * df1);
            const Complex ja = Complex(0.0, 1.0) * a;
            const Eigen::Index row = static_cast<Eigen::Index>(k) * P + p;
            jac(row, kEta) = d_eta * ja;
            jac(row, kTau) = d_tau * ja;
            jac(row, kCommonPhase) = ja;
        }
    }
    return jac;
}

struct FisherResult {
    Eigen::MatrixXd information;  // 3x3 with common phase, 2x2 without
    Eigen::Matrix2d bound;        // (eta, tau) block of the inverse, tau in s^2
    double var_eta = 0.0;
    double var_d = 0.0;           // bound(1,1) * c^2
};

/// F[p, k] = 2 SNR Re[(da/dtheta_p)^H (da/dtheta_k)].
inline FisherResult fisher_numeric(const ClockModel& clock, const SynthesizerConfig& synth,
                                   const ChannelParams& channel, const ProtocolConfig& cfg, double snr_db,
                                   bool include_common_phase = true) {
    detail::require(std::isfinite(snr_db), "fisher_numeric: SNR must be finite");
    const double snr = std::pow(10.0, snr_db / 10.0);
    ComplexMatrix jac = model_jacobian(clock, synth, channel, cfg);
    if (!include_common_phase) jac.conservativeResize(Eigen::NoChange, 2);

    FisherResult r;
    r.information = 2.0 * snr * (jac.adjoint() * jac).real();
    // Parameters differ in scale by ~10 orders of magnitude; invert the
    // unit-diagonal equilibrated matrix.
    const Eigen::VectorXd scale = r.information.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd equil = scale.asDiagonal() * r.information * scale.asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(equil);
    if (!lu.isInvertible() || !scale.allFinite()) {
        throw DegenerateInput("fisher_numeric: Fisher information matrix is singular");
    }
    const Eigen::MatrixXd inv = scale.asDiagonal() * lu.inverse() * scale.asDiagonal();
    r.bound = inv.topLeftCorner<2, 2>();
    r.var_eta = r.bound(0, 0);
    r.var_d = r.bound(1, 1) * channel.c * channel.c;
    return r;
}

}  // namespace pdoa
