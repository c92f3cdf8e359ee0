#pragma once

// Joint clock-skew and range estimation from a P x N measurement matrix.
//
// Pipeline: leading singular pair (u1, v1) of M; u1 is proportional to
// [1, phi, ..., phi^{P-1}] and v1 to conj([1, gamma, ..., gamma^{N-1}]), so
// phi and conj(gamma) follow from the shift relation head * z ~= tail, solved
// by least squares and then refined by weighted least squares with the
// closed-form inverse-residual-covariance weights. Finally
//
//   eta_hat = arg(phi_hat) / (2 pi df1 dt)
//   d_hat   = c arg(gamma_hat) / (2 pi df1 (2 + eta_hat)).

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pdoa/error.hpp"
#include "pdoa/model.hpp"
#include "pdoa/protocol.hpp"

namespace pdoa {

enum class Method { ls, wls, oracle };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::ls: return "ls";
        case Method::wls: return "wls";
        case Method::oracle: return "oracle";
    }
    return "?";
}

struct RankOneFactors {
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    ComplexVector u1;  // length P, unit norm
    ComplexVector v1;  // length N, unit norm
    bool low_confidence = false;  // sigma1 and sigma2 tie within 1e-12 sigma1

    double sigma_ratio() const { return sigma1 > 0.0 ? sigma2 / sigma1 : 0.0; }
};

struct JointEstimate {
    Complex phi_hat{1.0, 0.0};
    Complex gamma_hat{1.0, 0.0};
    double eta_hat = 0.0;  // dimensionless
    double d_hat = 0.0;    // m
    Method method = Method::wls;
    double sigma_ratio = 0.0;
    bool low_confidence = false;
};

struct AmbiguityLimits {
    double eta_max = 0.0;  // largest |eta0| before arg(phi) wraps
    double d_max = 0.0;    // largest d01 before arg(gamma) wraps, with (2 + eta0) ~= 2
};

inline AmbiguityLimits ambiguity_limits(double df1, double dt, double c = kSpeedOfLight) {
    detail::require(df1 > 0.0 && dt > 0.0 && c > 0.0, "ambiguity_limits: df1, dt and c must be > 0");
    return {1.0 / (2.0 * df1 * dt), c / (4.0 * df1)};
}

/// Range limit for a known skew: c / (2 df1 (2 + eta0)).
inline double ambiguity_range_exact(double df1, double eta0, double c = kSpeedOfLight) {
    detail::require(df1 > 0.0 && c > 0.0, "ambiguity_range_exact: df1 and c must be > 0");
    return c / (2.0 * df1 * (2.0 + eta0));
}

inline RankOneFactors rank_one_factors(const ComplexMatrix& m) {
    detail::require(m.rows() >= 2 && m.cols() >= 2, "rank_one_factors: matrix must be at least 2x2");
    if (!m.allFinite()) throw DegenerateInput("rank_one_factors: matrix has non-finite entries");
    if (m.norm() == 0.0) throw DegenerateInput("rank_one_factors: matrix is identically zero");

    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    RankOneFactors f;
    f.sigma1 = svd.singularValues()(0);
    f.sigma2 = svd.singularValues()(1);
    f.u1 = svd.matrixU().col(0);
    f.v1 = svd.matrixV().col(0);
    f.low_confidence = (f.sigma1 - f.sigma2) <= 1e-12 * f.sigma1;
    return f;
}

namespace detail {

inline Complex unit_normalize(Complex z, const char* who) {
    const double r = std::abs(z);
    if (!(r > 0.0) || !std::isfinite(r)) throw DegenerateInput(std::string(who) + ": shift estimate has zero modulus");
    return z / r;
}

}  // namespace detail

/// z = (head^H head)^{-1} head^H tail, normalized to unit modulus, where head
/// and tail are the first and last L-1 entries of w.
inline Complex shift_ls(const ComplexVector& w) {
    detail::require(w.size() >= 2, "shift_ls: vector length must be >= 2");
    const Eigen::Index n = w.size() - 1;
    const auto head = w.head(n);
    const auto tail = w.tail(n);
    const double energy = head.squaredNorm();
    if (!(energy > 0.0)) throw DegenerateInput("shift_ls: head subvector is zero");
    return detail::unit_normalize(head.dot(tail) / energy, "shift_ls");
}

/// W[p, n] = (L min(p, n) - p n) z^{p-n} / L for p, n = 1..L-1: the inverse
/// covariance of the residual head * z - tail under white perturbations.
inline ComplexMatrix wls_weights(Complex z, int length) {
    detail::require(length >= 2, "wls_weights: length must be >= 2");
    const int n = length - 1;
    const double zarg = std::arg(z);
    ComplexMatrix w(n, n);
    for (int p = 1; p <= n; ++p) {
        for (int q = 1; q <= n; ++q) {
            const double mag = static_cast<double>(length * std::min(p, q) - p * q) / length;
            w(p - 1, q - 1) = mag * unit_phasor((p - q) * zarg);
        }
    }
    return w;
}

/// z = (head^H W head)^{-1} head^H W tail, normalized to unit modulus.
inline Complex shift_wls(const ComplexVector& w, const ComplexMatrix& weights) {
    detail::require(w.size() >= 2, "shift_wls: vector length must be >= 2");
    const Eigen::Index n = w.size() - 1;
    detail::require(weights.rows() == n && weights.cols() == n,
                    "shift_wls: weight matrix must be (L-1)x(L-1)");
    const ComplexVector head = w.head(n);
    const ComplexVector tail = w.tail(n);
    const ComplexVector wh = weights * head;
    const Complex denom = head.dot(wh);  // head^H W head
    if (!(std::abs(denom) > 0.0)) throw DegenerateInput("shift_wls: singular normal equation");
    const Complex numer = head.dot(weights * tail);
    return detail::unit_normalize(numer / denom, "shift_wls");
}

struct EstimateOptions {
    Method method = Method::wls;
    int wls_iterations = 1;  // WLS refinements after the LS start
    double c = kSpeedOfLight;
    // grid_search_oracle parameters, used when method == oracle
    int oracle_phi_points = 64;
    int oracle_gamma_points = 64;
    int oracle_levels = 3;
};

/// eta_hat and d_hat from unit phasor estimates.
inline void recover_parameters(JointEstimate& est, double df1, double dt, double c) {
    est.eta_hat = std::arg(est.phi_hat) / (kTwoPi * df1 * dt);
    est.d_hat = c * std::arg(est.gamma_hat) / (kTwoPi * df1 * (2.0 + est.eta_hat));
}

namespace detail {

inline Complex refine_shift(const ComplexVector& w, Method method, int iterations) {
    Complex z = shift_ls(w);
    if (method == Method::wls) {
        for (int i = 0; i < iterations; ++i) z = shift_wls(w, wls_weights(z, static_cast<int>(w.size())));
    }
    return z;
}

inline void check_metadata(const MeasurementMatrix& m) {
    require(m.df1 > 0.0 && std::isfinite(m.df1), "measurement matrix: df1 must be > 0");
    require(m.dt > 0.0 && std::isfinite(m.dt), "measurement matrix: dt must be > 0");
    require(m.p_time() >= 2 && m.n_freq() >= 2, "measurement matrix: P and N must be >= 2");
}

}  // namespace detail

inline JointEstimate grid_search_oracle(const MeasurementMatrix& m, int phi_grid_points, int gamma_grid_points,
                                 int refinement_levels, double c = kSpeedOfLight);

inline JointEstimate estimate_joint(const MeasurementMatrix& m, const EstimateOptions& opt = {}) {
    detail::check_metadata(m);
    detail::require(opt.wls_iterations >= 1, "EstimateOptions.wls_iterations must be >= 1");
    if (opt.method == Method::oracle) {
        return grid_search_oracle(m, opt.oracle_phi_points, opt.oracle_gamma_points, opt.oracle_levels, opt.c);
    }
    const RankOneFactors f = rank_one_factors(m.entries);

    JointEstimate est;
    est.method = opt.method;
    est.sigma_ratio = f.sigma_ratio();
    est.low_confidence = f.low_confidence;
    est.phi_hat = detail::refine_shift(f.u1, opt.method, opt.wls_iterations);
    // v1 is proportional to conj(h): its shift is conj(gamma).
    est.gamma_hat = std::conj(detail::refine_shift(f.v1, opt.method, opt.wls_iterations));
    recover_parameters(est, m.df1, m.dt, opt.c);
    return est;
}

inline JointEstimate estimate_joint(const MeasurementMatrix& m, Method method) {
    EstimateOptions opt;
    opt.method = method;
    return estimate_joint(m, opt);
}

/// Classical protocol: tau_eta_hat = arg(shift_ls(a)) / (2 pi df1). Reading
/// c * tau_eta_hat / 2 as the range is biased by c eta0 (dt + tau01) / 2.
inline double estimate_classical(const ComplexVector& a, double df1) {
    detail::require(a.size() >= 2, "estimate_classical: vector length must be >= 2");
    detail::require(df1 > 0.0, "estimate_classical: df1 must be > 0");
    return std::arg(shift_ls(a)) / (kTwoPi * df1);
}

namespace detail {

// Matched-filter response |u(phi)^H M v(gamma)|^2 evaluated over a rectangular
// grid of phases. Rows of `left` hold u(phi)^H M for each phi candidate.
struct GridBest {
    double phi_arg = 0.0;
    double gamma_arg = 0.0;
    double score = -1.0;
};

inline GridBest search_grid(const ComplexMatrix& m, double phi_lo, double phi_step, int phi_points,
                            double gamma_lo, double gamma_step, int gamma_points) {
    const Eigen::Index P = m.rows();
    const Eigen::Index N = m.cols();
    GridBest best;
    ComplexVector vg(N);
    ComplexMatrix left(phi_points, N);
    for (int i = 0; i < phi_points; ++i) {
        const double a = phi_lo + i * phi_step;
        ComplexVector u(P);
        for (Eigen::Index p = 0; p < P; ++p) u(p) = unit_phasor(p * a);
        left.row(i) = u.adjoint() * m;
    }
    for (int j = 0; j < gamma_points; ++j) {
        const double b = gamma_lo + j * gamma_step;
        // v(gamma) = [1, conj(gamma), ..., conj(gamma)^{N-1}]
        for (Eigen::Index k = 0; k < N; ++k) vg(k) = unit_phasor(-static_cast<double>(k) * b);
        const ComplexVector resp = left * vg;
        for (int i = 0; i < phi_points; ++i) {
            const double s = std::norm(resp(i));
            if (s > best.score) {
                best.score = s;
                best.phi_arg = phi_lo + i * phi_step;
                best.gamma_arg = b;
            }
        }
    }
    return best;
}

}  // namespace detail

/// Final grid spacing (phi, gamma) of grid_search_oracle for the given grid.
inline std::pair<double, double> oracle_resolution(int phi_grid_points, int gamma_grid_points,
                                                   int refinement_levels) {
    double sp = kTwoPi / phi_grid_points;
    double sg = kTwoPi / gamma_grid_points;
    for (int l = 0; l < refinement_levels; ++l) {
        sp = 2.0 * sp / (phi_grid_points - 1);
        sg = 2.0 * sg / (gamma_grid_points - 1);
    }
    return {sp, sg};
}

/// Brute-force maximizer of the 2-D matched filter over unit phasors.
///
/// Level 0 samples (-pi, pi] on a uniform grid; each refinement level
/// re-samples [best - step, best + step] with the same point count, so the
/// spacing shrinks by (points - 1) / 2 per level.
inline JointEstimate grid_search_oracle(const MeasurementMatrix& m, int phi_grid_points, int gamma_grid_points,
                                        int refinement_levels, double c) {
    detail::check_metadata(m);
    detail::require(phi_grid_points >= 8 && gamma_grid_points >= 8,
                    "grid_search_oracle: grids need at least 8 points per axis");
    detail::require(refinement_levels >= 0, "grid_search_oracle: refinement_levels must be >= 0");
    if (m.entries.norm() == 0.0) throw DegenerateInput("grid_search_oracle: matrix is identically zero");

    constexpr double pi = std::numbers::pi;
    double sp = kTwoPi / phi_grid_points;
    double sg = kTwoPi / gamma_grid_points;
    detail::GridBest best = detail::search_grid(m.entries, -pi + sp, sp, phi_grid_points, -pi + sg, sg,
                                                gamma_grid_points);
    for (int l = 0; l < refinement_levels; ++l) {
        const double np = 2.0 * sp / (phi_grid_points - 1);
        const double ng = 2.0 * sg / (gamma_grid_points - 1);
        best = detail::search_grid(m.entries, best.phi_arg - sp, np, phi_grid_points, best.gamma_arg - sg, ng,
                                   gamma_grid_points);
        sp = np;
        sg = ng;
    }

    JointEstimate est;
    est.method = Method::oracle;
    est.phi_hat = unit_phasor(wrap_phase(best.phi_arg));
    est.gamma_hat = unit_phasor(wrap_phase(best.gamma_arg));
    recover_parameters(est, m.df1, m.dt, c);
    return est;
}

}  // namespace pdoa
