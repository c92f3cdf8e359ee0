#pragma once

// Monte Carlo RMSE harness.
//
// A cell is one (SNR, N, P, estimator) combination. Every trial t of a cell
// draws from streams derived from (cell seed, t); the cell seed depends on
// (master seed, SNR, N, P) but not on the estimator, so all estimators in a
// sweep see the same noise realizations. Per-trial outcomes go to
// preallocated slots and are reduced in trial order, which makes reports
// independent of the thread count.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pdoa/crlb.hpp"
#include "pdoa/error.hpp"
#include "pdoa/estimator.hpp"
#include "pdoa/matrix_csv.hpp"
#include "pdoa/model.hpp"
#include "pdoa/protocol.hpp"
#include "pdoa/random.hpp"

namespace pdoa {

enum class Estimator { ls, wls, oracle, classical };

inline std::string_view to_string(Estimator e) {
    switch (e) {
        case Estimator::ls: return "ls";
        case Estimator::wls: return "wls";
        case Estimator::oracle: return "oracle";
        case Estimator::classical: return "classical";
    }
    return "?";
}

inline std::optional<Estimator> parse_estimator(std::string_view s) {
    if (s == "ls") return Estimator::ls;
    if (s == "wls") return Estimator::wls;
    if (s == "oracle") return Estimator::oracle;
    if (s == "classical") return Estimator::classical;
    return std::nullopt;
}

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Scenario {
    ClockModel clock{32.0e6, 80e-6};
    SynthesizerConfig synth{};
    ChannelParams channel{140.0, kSpeedOfLight, 1.0};
    double dt = 80e-6;
    SynthesisMode mode = SynthesisMode::idealized;
    NoiseModel noise = NoiseModel::circular_gaussian;
    // Redraw d01 ~ U[range_min, range_max] per trial instead of using channel.d01.
    bool random_range = false;
    double range_min = 1.0;
    double range_max = 140.0;
    // grid_search_oracle settings
    int oracle_points = 64;
    int oracle_levels = 3;

    double df1() const { return frequency_step(synth, clock.nu1); }
};

struct SweepConfig {
    std::vector<double> snr_db_list{10.0};
    std::vector<std::pair<int, int>> hop_list{{10, 10}};  // (N, P)
    int trials = 1000;
    Scenario base{};
    std::vector<Estimator> estimators{Estimator::wls};
    std::uint64_t master_seed = 1;
};

struct RmseRow {
    double snr_db = 0.0;
    int n_freq = 0;
    int p_time = 0;
    Estimator estimator = Estimator::wls;
    double rmse_eta = 0.0;  // dimensionless
    double rmse_d = 0.0;    // m
    double bias_eta = 0.0;
    double bias_d = 0.0;
    double crlb_sigma_eta = 0.0;
    double crlb_sigma_d = 0.0;
    double wrap_fraction = 0.0;
    int trials = 0;  // trials contributing to the statistics
    int failed = 0;  // trials excluded (degenerate input or branch-cut crossing)
};

struct RmseReport {
    std::vector<RmseRow> rows;
};

struct RmseStats {
    double rmse = 0.0;
    double bias = 0.0;
};

/// bias = mean(x) - truth, rmse = sqrt(mean((x - truth)^2)).
inline RmseStats rmse(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw InvalidArgument("rmse: empty estimate list");
    double sum = 0.0;
    double sq = 0.0;
    for (double x : estimates) {
        const double e = x - truth;
        sum += e;
        sq += e * e;
    }
    const double n = static_cast<double>(estimates.size());
    return {std::sqrt(sq / n), sum / n};
}

/// Worker count: PDOA_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
inline int threads_from_env() {
    if (const char* env = std::getenv("PDOA_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 256));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

struct TrialOutcome {
    bool ok = false;
    bool near_wrap = false;
    double eta_err = 0.0;
    double d_err = 0.0;
};

inline bool crosses_branch(double est_arg, double true_arg) {
    return std::abs(est_arg - true_arg) > std::numbers::pi;
}

inline bool near_branch(double arg) { return std::abs(arg) > 0.95 * std::numbers::pi; }

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    threads = std::clamp(threads, 1, std::max(1, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < count; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline std::string cell_label(double snr_db, int n, int p, Estimator e) {
    std::ostringstream os;
    os << "cell (snr_db=" << snr_db << ", N=" << n << ", P=" << p << ", estimator=" << to_string(e) << ")";
    return os.str();
}

inline TrialOutcome run_trial(const Scenario& sc, const ProtocolConfig& cfg, const NoiseSpec& noise,
                              Estimator estimator, const std::optional<MeasurementMatrix>& fixed_a,
                              std::uint64_t cell_seed, int t) {
    Rng scenario_rng(derive_seed(cell_seed, {static_cast<std::uint64_t>(t), 1}));
    Rng noise_rng(derive_seed(cell_seed, {static_cast<std::uint64_t>(t), 0}));

    ChannelParams channel = sc.channel;
    if (sc.random_range) {
        channel.d01 = sc.range_min + (sc.range_max - sc.range_min) * scenario_rng.uniform();
    }
    const ModelPhasors truth = model_phasors(sc.clock, sc.synth, sc.dt, channel);
    const double df1 = sc.df1();
    const double c = channel.c;

    TrialOutcome out;
    try {
        if (estimator == Estimator::classical) {
            const ComplexVector a = add_noise(classical_pdoa_vector(cfg, sc.clock, sc.synth, channel), noise,
                                              noise_rng);
            const double est_arg = std::arg(shift_ls(a));
            const double true_arg = wrap_phase(kTwoPi * df1 * truth.tau_eta);
            out.near_wrap = near_branch(est_arg);
            if (crosses_branch(est_arg, true_arg)) return out;
            const double tau_eta_hat = est_arg / (kTwoPi * df1);
            // The classical protocol has no skew estimate: it assumes eta0 = 0.
            out.eta_err = 0.0 - sc.clock.eta0;
            out.d_err = c * tau_eta_hat / 2.0 - channel.d01;
            out.ok = true;
            return out;
        }

        MeasurementMatrix a = fixed_a ? *fixed_a
                                      : synthesize_matrix(sc.mode, cfg, sc.clock, sc.synth, channel, scenario_rng);
        const MeasurementMatrix m = add_noise(a, noise, noise_rng);

        EstimateOptions opt;
        opt.c = c;
        opt.method = estimator == Estimator::ls ? Method::ls
                     : estimator == Estimator::wls ? Method::wls
                                                   : Method::oracle;
        opt.oracle_phi_points = sc.oracle_points;
        opt.oracle_gamma_points = sc.oracle_points;
        opt.oracle_levels = sc.oracle_levels;
        const JointEstimate est = estimate_joint(m, opt);

        const double phi_arg = std::arg(est.phi_hat);
        const double gamma_arg = std::arg(est.gamma_hat);
        out.near_wrap = near_branch(phi_arg) || near_branch(gamma_arg);
        if (crosses_branch(phi_arg, truth.phi_arg) || crosses_branch(gamma_arg, truth.gamma_arg)) return out;
        out.eta_err = est.eta_hat - sc.clock.eta0;
        out.d_err = est.d_hat - channel.d01;
        out.ok = true;
    } catch (const DegenerateInput&) {
        out.ok = false;
    }
    return out;
}

}  // namespace detail

inline void validate_scenario(const Scenario& sc) {
    sc.clock.validate();
    sc.synth.validate();
    sc.channel.validate();
    detail::require(sc.dt > 0.0, "scenario: dt must be > 0");
    const AmbiguityLimits lim = ambiguity_limits(sc.df1(), sc.dt, sc.channel.c);
    detail::require(std::abs(sc.clock.eta0) < lim.eta_max, "scenario: |eta0| outside the skew ambiguity limit");
    const double d_hi = sc.random_range ? sc.range_max : sc.channel.d01;
    detail::require(d_hi < ambiguity_range_exact(sc.df1(), sc.clock.eta0, sc.channel.c),
                    "scenario: d01 outside the range ambiguity limit");
    if (sc.random_range) {
        detail::require(sc.range_min >= 0.0 && sc.range_min <= sc.range_max,
                        "scenario: random range needs 0 <= range_min <= range_max");
    }
    detail::require(sc.oracle_points >= 8 && sc.oracle_levels >= 0, "scenario: invalid oracle grid");
}

/// One RMSE row. `threads` <= 0 means threads_from_env().
inline RmseRow run_cell(const Scenario& sc, int n_freq, int p_time, double snr_db, Estimator estimator, int trials,
                        std::uint64_t seed, int threads = 0) {
    const std::string label = detail::cell_label(snr_db, n_freq, p_time, estimator);
    detail::require(trials >= 1, label + ": trials must be >= 1");
    validate_scenario(sc);
    ProtocolConfig cfg{n_freq, p_time, sc.dt};
    try {
        cfg.validate(sc.synth, estimator != Estimator::classical);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(label + ": " + e.what());
    }
    if (threads <= 0) threads = threads_from_env();

    NoiseSpec noise;
    noise.snr_db = snr_db;
    noise.model = sc.noise;

    std::optional<MeasurementMatrix> fixed_a;
    if (!sc.random_range && estimator != Estimator::classical) {
        Rng rng(derive_seed(seed, {0xA11CE}));
        fixed_a = synthesize_matrix(sc.mode, cfg, sc.clock, sc.synth, sc.channel, rng);
    }

    std::vector<detail::TrialOutcome> slots(static_cast<std::size_t>(trials));
    detail::parallel_for(trials, threads, [&](int t) {
        slots[static_cast<std::size_t>(t)] = detail::run_trial(sc, cfg, noise, estimator, fixed_a, seed, t);
    });

    RmseRow row;
    row.snr_db = snr_db;
    row.n_freq = n_freq;
    row.p_time = p_time;
    row.estimator = estimator;
    std::vector<double> eta_err;
    std::vector<double> d_err;
    int near = 0;
    for (const auto& s : slots) {
        if (s.near_wrap) ++near;
        if (!s.ok) {
            ++row.failed;
            continue;
        }
        eta_err.push_back(s.eta_err);
        d_err.push_back(s.d_err);
    }
    row.trials = static_cast<int>(eta_err.size());
    row.wrap_fraction = static_cast<double>(near) / trials;

    if (snr_db >= 0.0 && row.failed * 100 > trials) {
        throw HarnessError(label + ": " + std::to_string(row.failed) + " of " + std::to_string(trials) +
                           " trials failed (more than 1% at SNR >= 0 dB)");
    }
    if (row.trials == 0) throw HarnessError(label + ": every trial failed");

    const RmseStats se = rmse(eta_err, 0.0);
    const RmseStats sd = rmse(d_err, 0.0);
    row.rmse_eta = se.rmse;
    row.bias_eta = se.bias;
    row.rmse_d = sd.rmse;
    row.bias_d = sd.bias;
    // The 2-D bound needs P >= 2; a single-epoch classical cell leaves the columns at 0.
    if (std::isfinite(snr_db) && p_time >= 2) {
        const CrlbResult b = crlb_closed_form(snr_db, sc.df1(), sc.dt, p_time, n_freq, sc.channel.c);
        row.crlb_sigma_eta = b.sigma_eta();
        row.crlb_sigma_d = b.sigma_d();
    }
    return row;
}

/// Seed for a cell; independent of the estimator so estimators share noise.
inline std::uint64_t cell_seed(std::uint64_t master, double snr_db, int n_freq, int p_time) {
    return derive_seed(master, {std::bit_cast<std::uint64_t>(snr_db), static_cast<std::uint64_t>(n_freq),
                                static_cast<std::uint64_t>(p_time)});
}

/// Rows ordered by SNR, then hop pair, then estimator, as listed in the config.
inline RmseReport run_sweep(const SweepConfig& cfg, int threads = 0) {
    detail::require(cfg.trials >= 1, "sweep: trials must be >= 1");
    detail::require(!cfg.snr_db_list.empty(), "sweep: SNR list is empty");
    detail::require(!cfg.hop_list.empty(), "sweep: hop list is empty");
    detail::require(!cfg.estimators.empty(), "sweep: estimator list is empty");
    validate_scenario(cfg.base);

    RmseReport report;
    for (double snr : cfg.snr_db_list) {
        for (const auto& [n, p] : cfg.hop_list) {
            const std::uint64_t seed = cell_seed(cfg.master_seed, snr, n, p);
            for (Estimator e : cfg.estimators) {
                report.rows.push_back(run_cell(cfg.base, n, p, snr, e, cfg.trials, seed, threads));
            }
        }
    }
    return report;
}

inline constexpr std::string_view kReportHeader =
    "snr_db,N,P,estimator,rmse_eta,rmse_d,bias_eta,bias_d,crlb_sigma_eta,crlb_sigma_d,wrap_fraction,trials";

/// Report CSV. Skew columns (rmse_eta, bias_eta, crlb_sigma_eta) are in ppm.
inline void write_report_csv(std::ostream& os, const RmseReport& report) {
    using detail::format_double;
    os << kReportHeader << '\n';
    for (const RmseRow& r : report.rows) {
        os << format_double(r.snr_db) << ',' << r.n_freq << ',' << r.p_time << ',' << to_string(r.estimator) << ','
           << format_double(r.rmse_eta * 1e6) << ',' << format_double(r.rmse_d) << ','
           << format_double(r.bias_eta * 1e6) << ',' << format_double(r.bias_d) << ','
           << format_double(r.crlb_sigma_eta * 1e6) << ',' << format_double(r.crlb_sigma_d) << ','
           << format_double(r.wrap_fraction) << ',' << r.trials << '\n';
    }
}

inline std::string report_to_csv(const RmseReport& report) {
    std::ostringstream os;
    write_report_csv(os, report);
    return os.str();
}

/// JSON summary with the sweep configuration echoed back.
inline nlohmann::json report_json(const SweepConfig& cfg, const RmseReport& report) {
    using nlohmann::json;
    const Scenario& sc = cfg.base;
    json config = {
        {"snr_db_list", cfg.snr_db_list},
        {"trials", cfg.trials},
        {"seed", cfg.master_seed},
        {"dt_s", sc.dt},
        {"df_hz", sc.df1()},
        {"nu1_hz", sc.clock.nu1},
        {"eta_ppm", sc.clock.eta0 * 1e6},
        {"d_m", sc.channel.d01},
        {"c_mps", sc.channel.c},
        {"mode", sc.mode == SynthesisMode::idealized ? "idealized" : "physical"},
        {"noise", sc.noise == NoiseModel::circular_gaussian ? "gaussian" : "von-mises"},
        {"random_range", sc.random_range},
    };
    json hops = json::array();
    for (const auto& [n, p] : cfg.hop_list) hops.push_back({n, p});
    config["hop_list"] = hops;
    json ests = json::array();
    for (Estimator e : cfg.estimators) ests.push_back(std::string(to_string(e)));
    config["estimators"] = ests;

    json rows = json::array();
    for (const RmseRow& r : report.rows) {
        rows.push_back({
            {"snr_db", r.snr_db},
            {"N", r.n_freq},
            {"P", r.p_time},
            {"estimator", std::string(to_string(r.estimator))},
            {"rmse_eta_ppm", r.rmse_eta * 1e6},
            {"rmse_d_m", r.rmse_d},
            {"bias_eta_ppm", r.bias_eta * 1e6},
            {"bias_d_m", r.bias_d},
            {"crlb_sigma_eta_ppm", r.crlb_sigma_eta * 1e6},
            {"crlb_sigma_d_m", r.crlb_sigma_d},
            {"wrap_fraction", r.wrap_fraction},
            {"trials", r.trials},
            {"failed", r.failed},
        });
    }
    return json{{"config", config}, {"rows", rows}};
}

}  // namespace pdoa
