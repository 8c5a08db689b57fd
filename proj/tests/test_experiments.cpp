#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qtransfer/experiments.hpp"
#include "qtransfer/report_io.hpp"
#include "json.hpp"

using namespace qtransfer;

namespace {

State qubit(const MatrixXc& rho) { return State::density(SpaceDescriptor::qudits({2}), rho); }

State pure_qubit(cplx a, cplx b) {
  VectorXc v(2);
  v << a, b;
  return State::pure(SpaceDescriptor::qudits({2}), v);
}

}  // namespace

TEST(TransferFidelity, Identities) {
  const cplx a{0.6}, b{0.0, 0.8};
  EXPECT_NEAR(transfer_fidelity(pure_qubit(a, b), a, b, false), 1.0, 1e-15);
  EXPECT_NEAR(transfer_fidelity(qubit(0.5 * MatrixXc::Identity(2, 2)), a, b, false), 0.5, 1e-15);
  EXPECT_NEAR(transfer_fidelity(qubit(0.5 * MatrixXc::Identity(2, 2)), a, b, true), 0.5, 1e-15);
  // Global phase does not matter.
  EXPECT_NEAR(transfer_fidelity(pure_qubit(a * std::polar(1.0, 0.7), b * std::polar(1.0, 0.7)), a, b, false), 1.0,
              1e-15);
  // Output carrying -i on |1> is undone by the gate.
  EXPECT_NEAR(transfer_fidelity(pure_qubit(a, cplx{0.0, -1.0} * b), a, b, true), 1.0, 1e-15);
  EXPECT_NEAR(transfer_fidelity(pure_qubit(a, b), cplx{1.0}, cplx{0.0}, true), std::norm(a), 1e-15);
  EXPECT_NEAR(transfer_fidelity(pure_qubit(cplx{0.8}, cplx{0.0, -0.6}), a, b, false), 0.0, 1e-15);
}

TEST(TransferFidelity, QutritUsesLowerBlock) {
  MatrixXc r = MatrixXc::Zero(3, 3);
  r(0, 0) = 0.5;
  r(1, 1) = 0.3;
  r(2, 2) = 0.2;
  const State s = State::density(SpaceDescriptor::qudits({3}), r);
  EXPECT_NEAR(transfer_fidelity(s, cplx{0.0}, cplx{1.0}, false), 0.3, 1e-15);
}

TEST(TransferFidelity, RejectsInvalidInput) {
  MatrixXc bad(2, 2);
  bad << 0.5, 0.6, 0.6, 0.5;  // eigenvalue -0.1
  EXPECT_THROW(transfer_fidelity(State::density(SpaceDescriptor::qudits({2}), bad, 1.0), cplx{1.0}, cplx{0.0}),
               DomainError);
  EXPECT_THROW(transfer_fidelity(pure_qubit(1.0, 0.0), cplx{1.0}, cplx{1.0}), DomainError);
  EXPECT_THROW(transfer_fidelity(pure_qubit(1.0, 0.0), cplx{1.0}, cplx{0.0}, cplx{2.0}), DomainError);
  EXPECT_THROW(transfer_fidelity(State::pure(SpaceDescriptor::qudits({4}), VectorXc::Unit(4, 0)), cplx{1.0},
                                 cplx{0.0}),
               DimensionError);
}

TEST(Experiments, ResizeKeepsEndDrives) {
  auto p = ChainParams::end_driven(3, 10.0, 0.5, cplx{0.02}, cplx{0.0, 0.03});
  const auto q = resize_chain(p, 6);
  EXPECT_EQ(q.nodes, 6);
  EXPECT_EQ(q.omega_first(), cplx{0.02});
  EXPECT_EQ(q.omega_last(), (cplx{0.0, 0.03}));
  EXPECT_EQ(q.omega_at(3), cplx{0.0});
}

TEST(Experiments, AutoGridEndsAtTransferTime) {
  const auto cfg = parse_config(R"({"experiment": "transfer", "preset": "raman-demo", "grid": {"t0": 5}})");
  const auto m = compute_effective_model(cfg.chain);
  const auto g = resolved_grid(cfg, m);
  EXPECT_NEAR(g.t1, 5.0 + std::numbers::pi / (2.0 * 0.5 * 0.02 * 0.02), 1e-9);
}

TEST(Experiments, FullModelTransferTime) {
  // Reference: dense diagonalization of the 3N-state single-excitation block.
  const auto p = ChainParams::end_driven(3, 10.0, 0.5, cplx{0.02}, cplx{0.02});
  EXPECT_NEAR(exact_transfer_time(p), 8804.51735339156, 1e-6);
  EXPECT_NEAR(exact_transfer_time(ChainParams::end_driven(3, 10.0, 0.5, cplx{0.01}, cplx{0.01})), 32375.55000088701,
              1e-5);
  // Two nodes share a single bond, roughly half the rate of the periodic k-sum.
  const auto p2 = ChainParams::end_driven(2, 10.0, 0.5, cplx{0.02}, cplx{0.02});
  EXPECT_NEAR(exact_transfer_time(p2), 8787.653312130335, 1e-6);
  EXPECT_GT(exact_transfer_time(p2) / compute_effective_model(p2).t_f, 2.0);
  EXPECT_TRUE(std::isinf(exact_transfer_time(ChainParams::end_driven(3, 10.0, 0.5, cplx{0.0}, cplx{0.0}))));
}

TEST(Experiments, GroundInputTransfersTrivially) {
  const auto cfg = parse_config(
      R"({"experiment": "transfer", "preset": "raman-demo", "transfer": {"alpha": 1, "beta": 0}, "grid": {"n_steps": 20}})");
  const auto out = run_transfer(cfg);
  EXPECT_NEAR(out.fidelity_gate, 1.0, 1e-9);
  EXPECT_NEAR(out.fidelity_no_gate, 1.0, 1e-9);
}

TEST(Experiments, ClosedTransferReachesHighCalibratedFidelity) {
  const auto cfg = parse_config(R"({"experiment": "transfer", "preset": "raman-demo", "grid": {"n_steps": 200}})");
  const auto out = run_transfer(cfg);
  EXPECT_GE(out.fidelity_calibrated, 0.95);
  EXPECT_NEAR(std::abs(out.calibrated_phase), 1.0, 1e-12);
  EXPECT_GE(out.fidelity_calibrated, out.fidelity_gate);
  EXPECT_NEAR(out.final_atom.density_matrix().trace().real(), 1.0, 1e-7);
  EXPECT_EQ(out.curves.times.size(), 201u);
  EXPECT_GE(out.curves.series("P_1_3").back(), 0.45);
  EXPECT_LE(out.curves.series("P_1_1").back(), 0.03);
}

TEST(Experiments, DecayDropMatchesEstimateWithinFactorTwo) {
  // |1> input: the fidelity is the retrieved |1> population, independent of any phase.
  const char* base = R"({"experiment": "transfer", "preset": "raman-demo",
    "chain": {"gamma": 1e-4, "kappa": 2.5e-4}, "transfer": {"alpha": 0, "beta": 1, "backend": "%s"},
    "grid": {"n_steps": 50}})";
  auto make = [&](const char* be) {
    char buf[512];
    std::snprintf(buf, sizeof buf, base, be);
    return parse_config(buf);
  };
  const auto closed = run_transfer(make("schrodinger"));
  const auto open = run_transfer(make("lindblad"));
  const double drop = closed.fidelity_no_gate - open.fidelity_no_gate;
  const double predicted = 1.0 - open.model.f_est;
  ASSERT_GT(predicted, 0.0);
  EXPECT_GT(drop, 0.5 * predicted);
  EXPECT_LT(drop, 2.0 * predicted);
}

TEST(Experiments, CompareWithoutDriveIsFlat) {
  const auto cfg = parse_config(R"({"experiment": "compare", "preset": "raman-demo",
    "chain": {"omega_first": 0, "omega_last": 0}, "grid": {"t1": 1000, "n_steps": 20}})");
  const auto out = run_compare(cfg);
  EXPECT_LE(out.summary.max_dev_first, 1e-9);
  EXPECT_LE(out.summary.max_dev_last, 1e-9);
  EXPECT_LE(out.summary.peak_leakage, 1e-9);
  EXPECT_NEAR(out.summary.final_first, 0.5, 1e-9);
  EXPECT_TRUE(std::isinf(out.summary.t_f));
}

TEST(Experiments, CompareTracksEffectiveCurves) {
  const auto cfg = parse_config(R"({"experiment": "compare", "preset": "raman-demo-weak", "grid": {"n_steps": 400}})");
  const auto out = run_compare(cfg);
  EXPECT_LE(out.summary.max_dev_first, 0.05);
  EXPECT_LE(out.summary.max_dev_last, 0.05);
  EXPECT_GE(out.summary.final_last, 0.45);
  EXPECT_EQ(out.exact.times, out.effective.times);
}

TEST(Experiments, CompareRejectsLargeMasterEquation) {
  const auto cfg = parse_config(R"({"experiment": "compare", "preset": "raman-demo", "chain": {"nodes": 4}})");
  EXPECT_THROW(run_compare(cfg), DimensionError);
}

TEST(Experiments, ScanWithoutLossIsPerfect) {
  const auto cfg = parse_config(R"({"experiment": "fidelity-scan", "preset": "raman-demo",
    "scan": {"nodes": [5, 2, 3]}})");
  const auto rep = run_fidelity_scan(cfg);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].nodes, 2);
  for (const auto& r : rep.rows) EXPECT_DOUBLE_EQ(r.f_est, 1.0);
  EXPECT_TRUE(rep.nonincreasing);
  EXPECT_FALSE(rep.claims);
  EXPECT_TRUE(std::isnan(rep.rows[0].t_f_us));
}

TEST(Experiments, HardwareScanReportsClaims) {
  const auto cfg = parse_config(R"({"experiment": "fidelity-scan", "preset": "stripline-hardware",
    "scan": {"nodes": [2, 3, 4, 5, 100]}})");
  const auto rep = run_fidelity_scan(cfg);
  ASSERT_TRUE(rep.claims);
  EXPECT_EQ(rep.claims->nodes, 100);
  EXPECT_NEAR(rep.claims->computed_f, 0.88869418027086004, 1e-12);
  EXPECT_TRUE(rep.claims->fidelity_agrees);
  EXPECT_FALSE(rep.claims->time_agrees);
  EXPECT_NEAR(rep.claims->computed_t_f_us, 31415.926535897932 / (2.0 * std::numbers::pi * 200.0), 1e-9);
  EXPECT_FALSE(rep.nonincreasing);
  EXPECT_EQ(rep.max_increase_at, 5);
  EXPECT_NEAR(rep.max_increase, 0.88869448177921508 - 0.88868916682513435, 1e-12);
}

TEST(Experiments, StirapExperimentDefaultsToTotalTime) {
  const auto cfg = parse_config(R"({"experiment": "stirap", "preset": "raman-demo",
    "schedule": {"amp1": 0.004, "ampN": 0.004, "width": 64000, "overlap": 0.5}, "grid": {"n_steps": 100}})");
  const auto out = run_stirap_experiment(cfg);
  EXPECT_EQ(out.intermediate_mode, 0);
  EXPECT_DOUBLE_EQ(out.curves.times.back(), 96000.0);
  EXPECT_GE(out.final_transfer, 0.95);
  EXPECT_LT(out.peak_upper, 0.05);
}

TEST(ReportIo, CsvCarriesMetadataAndRoundTrips) {
  const auto cfg = parse_config(R"({"experiment": "transfer", "preset": "raman-demo", "grid": {"n_steps": 10}})");
  const auto out = run_transfer(cfg);
  const auto meta = run_metadata(cfg, &out.curves);
  EXPECT_TRUE(meta.count("config"));
  EXPECT_TRUE(meta.count("version"));
  EXPECT_EQ(meta.at("backend"), "schrodinger");
  const std::string text = format_csv(out.curves, meta);
  EXPECT_EQ(text.rfind("# ", 0), 0u);
  const auto t = parse_csv(text);
  EXPECT_EQ(t.metadata.at("experiment"), "transfer");
  EXPECT_EQ(t.columns.front(), "t");
  ASSERT_EQ(t.rows.size(), out.curves.times.size());
  const auto p = t.column("P_1_3");
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], out.curves.series("P_1_3")[i]);
  // The embedded config reproduces the run.
  EXPECT_EQ(parse_config(t.metadata.at("config")), cfg);
}

TEST(ReportIo, StochasticCsvHasStderrColumns) {
  const auto cfg = parse_config(R"({"experiment": "compare", "preset": "raman-demo", "chain": {"nodes": 2,
    "gamma": 0.02, "kappa": 0.02}, "transfer": {"backend": "mcwf"}, "mcwf": {"n_traj": 20, "seed": 4},
    "grid": {"t1": 50, "n_steps": 5}})");
  const auto out = run_compare(cfg);
  const auto meta = run_metadata(cfg, &out.exact);
  EXPECT_EQ(meta.at("seed"), "4");
  EXPECT_EQ(meta.at("n_traj"), "20");
  const auto t = parse_csv(format_csv(out.exact, meta));
  EXPECT_NO_THROW(t.column("P_1_1_stderr"));
}

TEST(ReportIo, RunAndEmitWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "qtransfer_emit_test";
  std::filesystem::remove_all(dir);
  auto cfg = parse_config(R"({"experiment": "fidelity-scan", "preset": "stripline-hardware",
    "scan": {"nodes_from": 2, "nodes_to": 6}})");
  cfg.output.dir = dir.string();
  const auto paths = run_and_emit(cfg);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths.front().filename(), "fidelity_report.json");
  std::ifstream in(paths.front());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto j = nlohmann::json::parse(ss.str());
  EXPECT_EQ(j["rows"].size(), 5u);
  EXPECT_TRUE(j.contains("metadata"));
  std::filesystem::remove_all(dir);
}
