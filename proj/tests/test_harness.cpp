#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pdoa/harness.hpp"

namespace pdoa {
namespace {

TEST(Rmse, ExampleLists) {
    const RmseStats a = rmse({1.0, 2.0, 3.0}, 2.0);
    EXPECT_NEAR(a.rmse, std::sqrt(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(a.bias, 0.0, 1e-15);
    const RmseStats b = rmse({5.0, 5.0}, 3.0);
    EXPECT_DOUBLE_EQ(b.rmse, 2.0);
    EXPECT_DOUBLE_EQ(b.bias, 2.0);
    EXPECT_THROW(rmse({}, 0.0), InvalidArgument);
}

// Property: rmse^2 = bias^2 + population variance.
TEST(RmseProperty, BiasVarianceDecomposition) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(1 + trial);
        for (double& v : x) v = 3.0 + rng.normal();
        const double truth = rng.normal();
        const RmseStats s = rmse(x, truth);
        const double m = oracle::mean(x);
        double var = 0.0;
        for (double v : x) var += (v - m) * (v - m);
        var /= static_cast<double>(x.size());
        ASSERT_NEAR(s.rmse * s.rmse, s.bias * s.bias + var, 1e-10);
        ASSERT_NEAR(s.bias, m - truth, 1e-12);
    }
}

TEST(RunCell, NoiselessIsExact) {
    const Scenario sc;
    for (Estimator e : {Estimator::ls, Estimator::wls}) {
        const RmseRow r = run_cell(sc, 10, 10, INFINITY, e, 20, 1, 1);
        EXPECT_LT(r.rmse_eta, 1e-9);
        EXPECT_LT(r.rmse_d, 1e-9);
        EXPECT_EQ(r.trials, 20);
        EXPECT_EQ(r.failed, 0);
        EXPECT_EQ(r.crlb_sigma_eta, 0.0);
    }
}

TEST(RunCell, ClassicalBiasWithoutNoise) {
    const RmseRow r = run_cell(Scenario{}, 10, 1, INFINITY, Estimator::classical, 5, 1, 1);
    EXPECT_NEAR(r.bias_d, 0.960, 0.0096);
    EXPECT_NEAR(r.bias_eta, -80e-6, 1e-15);
    EXPECT_NEAR(r.rmse_d, std::abs(r.bias_d), 1e-12);
}

TEST(RunCell, DeterministicAcrossThreadCounts) {
    Scenario sc;
    sc.random_range = true;
    const RmseRow a = run_cell(sc, 8, 6, 5.0, Estimator::wls, 300, 77, 1);
    const RmseRow b = run_cell(sc, 8, 6, 5.0, Estimator::wls, 300, 77, 4);
    EXPECT_EQ(a.rmse_eta, b.rmse_eta);
    EXPECT_EQ(a.rmse_d, b.rmse_d);
    EXPECT_EQ(a.bias_eta, b.bias_eta);
    EXPECT_EQ(a.bias_d, b.bias_d);
    EXPECT_EQ(a.wrap_fraction, b.wrap_fraction);
    const RmseRow c = run_cell(sc, 8, 6, 5.0, Estimator::wls, 300, 78, 1);
    EXPECT_NE(a.rmse_d, c.rmse_d);
}

TEST(RunCell, CrlbColumnsMatchClosedForm) {
    const RmseRow r = run_cell(Scenario{}, 10, 10, 10.0, Estimator::wls, 50, 3, 1);
    const CrlbResult c = crlb_closed_form(10.0, 0.5e6, 80e-6, 10, 10);
    EXPECT_DOUBLE_EQ(r.crlb_sigma_eta, c.sigma_eta());
    EXPECT_DOUBLE_EQ(r.crlb_sigma_d, c.sigma_d());
}

TEST(RunCell, RejectsInvalidInputs) {
    const Scenario sc;
    EXPECT_THROW(run_cell(sc, 10, 1, 10.0, Estimator::wls, 10, 1, 1), InvalidArgument);
    EXPECT_THROW(run_cell(sc, 10, 10, 10.0, Estimator::wls, 0, 1, 1), InvalidArgument);
    Scenario far = sc;
    far.channel.d01 = 200.0;
    EXPECT_THROW(run_cell(far, 10, 10, 10.0, Estimator::wls, 10, 1, 1), InvalidArgument);
    try {
        run_cell(sc, 10, 1, 10.0, Estimator::wls, 10, 1, 1);
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("snr_db=10"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("P=1"), std::string::npos) << e.what();
    }
}

TEST(RunCell, ExcessiveFailuresRaise) {
    // d01 just inside the limit: noise pushes arg(gamma) across the branch cut often.
    Scenario sc;
    sc.channel.d01 = 149.0;
    EXPECT_THROW(run_cell(sc, 10, 10, 0.0, Estimator::wls, 200, 1, 1), HarnessError);
    // Below 0 dB failures are recorded, not fatal.
    const RmseRow r = run_cell(sc, 10, 10, -5.0, Estimator::wls, 200, 1, 1);
    EXPECT_GT(r.failed, 0);
    EXPECT_EQ(r.trials + r.failed, 200);
    EXPECT_GT(r.wrap_fraction, 0.0);
}

TEST(RunSweep, SingleCellEqualsRunCell) {
    SweepConfig cfg;
    cfg.trials = 100;
    cfg.master_seed = 5;
    const RmseReport rep = run_sweep(cfg, 1);
    ASSERT_EQ(rep.rows.size(), 1u);
    const RmseRow r = run_cell(cfg.base, 10, 10, 10.0, Estimator::wls, 100, cell_seed(5, 10.0, 10, 10), 1);
    EXPECT_EQ(rep.rows[0].rmse_eta, r.rmse_eta);
    EXPECT_EQ(rep.rows[0].rmse_d, r.rmse_d);
}

TEST(RunSweep, RowOrderAndSharedNoise) {
    SweepConfig cfg;
    cfg.trials = 200;
    cfg.snr_db_list = {10.0, 25.0};
    cfg.hop_list = {{10, 10}, {4, 10}};
    cfg.estimators = {Estimator::wls, Estimator::ls};
    const RmseReport rep = run_sweep(cfg, 1);
    ASSERT_EQ(rep.rows.size(), 8u);
    EXPECT_EQ(rep.rows[0].snr_db, 10.0);
    EXPECT_EQ(rep.rows[2].n_freq, 4);
    EXPECT_EQ(rep.rows[1].estimator, Estimator::ls);
    EXPECT_EQ(rep.rows[4].snr_db, 25.0);
    for (std::size_t i = 0; i < rep.rows.size(); i += 2) {
        EXPECT_LE(rep.rows[i].rmse_eta, rep.rows[i + 1].rmse_eta * 1.02) << i;
    }
    // Higher SNR lowers the error; fewer carriers raise the range error.
    EXPECT_LT(rep.rows[4].rmse_d, rep.rows[0].rmse_d);
    EXPECT_LT(rep.rows[4].rmse_eta, rep.rows[0].rmse_eta);
    EXPECT_GT(rep.rows[6].rmse_d, rep.rows[4].rmse_d);
}

TEST(RunSweep, EfficiencyNearBound) {
    SweepConfig cfg;
    cfg.trials = 2000;
    cfg.snr_db_list = {20.0};
    const RmseRow r = run_sweep(cfg, 1).rows.at(0);
    EXPECT_GT(r.rmse_eta / r.crlb_sigma_eta, 0.9);
    EXPECT_LT(r.rmse_eta / r.crlb_sigma_eta, 1.2);
    EXPECT_GT(r.rmse_d / r.crlb_sigma_d, 0.9);
    EXPECT_LT(r.rmse_d / r.crlb_sigma_d, 1.2);
}

TEST(RunSweep, PhysicalModeMatchesIdealized) {
    SweepConfig cfg;
    cfg.trials = 200;
    const RmseRow ideal = run_sweep(cfg, 1).rows.at(0);
    cfg.base.mode = SynthesisMode::physical;
    const RmseRow phys = run_sweep(cfg, 1).rows.at(0);
    EXPECT_NEAR(ideal.rmse_d, phys.rmse_d, 1e-6);
    EXPECT_NEAR(ideal.rmse_eta, phys.rmse_eta, 1e-11);
}

TEST(ThreadsFromEnv, ReadsVariable) {
    setenv("PDOA_THREADS", "3", 1);
    EXPECT_EQ(threads_from_env(), 3);
    setenv("PDOA_THREADS", "zero", 1);
    EXPECT_GE(threads_from_env(), 1);
    unsetenv("PDOA_THREADS");
}

TEST(ReportCsv, HeaderAndUnits) {
    RmseReport rep;
    RmseRow r;
    r.snr_db = 10;
    r.n_freq = 10;
    r.p_time = 10;
    r.rmse_eta = 1.0 / 1024.0;
    r.rmse_d = 0.5;
    r.trials = 7;
    rep.rows.push_back(r);
    const std::string csv = report_to_csv(rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kReportHeader);
    EXPECT_NE(csv.find("\n10,10,10,wls,976.5625,0.5,0,0,0,0,0,7\n"), std::string::npos) << csv;
}

TEST(ReportJson, EchoesConfig) {
    SweepConfig cfg;
    cfg.trials = 10;
    const nlohmann::json j = report_json(cfg, run_sweep(cfg, 1));
    EXPECT_EQ(j["config"]["trials"], 10);
    EXPECT_EQ(j["rows"].size(), 1u);
}

}  // namespace
}  // namespace pdoa
