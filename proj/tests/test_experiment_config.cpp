#include <gtest/gtest.h>

#include <numbers>

#include "qtransfer/experiment_config.hpp"

using namespace qtransfer;

namespace {

std::string key_path_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, MinimalTransferDefaults) {
  const auto c = parse_config(R"({"experiment": "transfer"})");
  EXPECT_EQ(c.experiment, ExperimentKind::transfer);
  EXPECT_EQ(c.backend, Backend::schrodinger);
  EXPECT_TRUE(c.grid_auto_end);
  EXPECT_EQ(c.chain.nodes, 3);
  EXPECT_NEAR(std::norm(c.alpha) + std::norm(c.beta), 1.0, 1e-15);
  EXPECT_FALSE(c.claims());
}

TEST(Config, RateStringsInUnitsOfG) {
  const auto c = parse_config(R"({"experiment": "transfer",
    "chain": {"delta": "10g", "j_c": "0.5g", "omega_first": "0.02g", "omega_last": [0.0, 0.03], "gamma": 1e-3}})");
  EXPECT_DOUBLE_EQ(c.chain.delta, 10.0);
  EXPECT_DOUBLE_EQ(c.chain.j_c, 0.5);
  EXPECT_EQ(c.chain.omega_first(), cplx{0.02});
  EXPECT_EQ(c.chain.omega_last(), (cplx{0.0, 0.03}));
  EXPECT_DOUBLE_EQ(c.chain.gamma, 1e-3);
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "chain": {"delta": "10"}})"), "chain.delta");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "chain": {"delta": "ten g"}})"), "chain.delta");
}

TEST(Config, PhysicalUnitsConvertToG) {
  const auto c = parse_config(R"({"experiment": "transfer",
    "chain": {"unit": "2pi*MHz", "g": 200, "delta": 2000, "j_c": 100, "omega_first": 2, "omega_last": 2,
              "gamma": 0.02, "kappa": "2.5e-4g"}})");
  EXPECT_DOUBLE_EQ(c.chain.delta, 10.0);
  EXPECT_DOUBLE_EQ(c.chain.j_c, 0.5);
  EXPECT_DOUBLE_EQ(c.chain.omega_first().real(), 0.01);
  EXPECT_DOUBLE_EQ(c.chain.gamma, 1e-4);
  EXPECT_DOUBLE_EQ(c.chain.kappa, 2.5e-4);
  ASSERT_TRUE(c.g_rad_per_us);
  EXPECT_NEAR(*c.g_rad_per_us, 2.0 * std::numbers::pi * 200.0, 1e-12);

  const auto k = parse_config(R"({"experiment": "transfer", "chain": {"unit": "2pi*kHz", "g": 4, "delta": 40}})");
  EXPECT_NEAR(*k.g_rad_per_us, 2.0 * std::numbers::pi * 4e-3, 1e-15);
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "chain": {"unit": "2pi*MHz", "delta": 2000}})"), "chain.g");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "chain": {"unit": "Hz", "g": 1}})"), "chain.unit");
}

TEST(Config, HardwarePresetExpands) {
  const auto c = parse_config(R"({"experiment": "fidelity-scan", "preset": "stripline-hardware",
                                  "scan": {"nodes_from": 2, "nodes_to": 5}})");
  EXPECT_DOUBLE_EQ(c.chain.delta, 10.0);
  EXPECT_DOUBLE_EQ(c.chain.j_c, 0.5);
  EXPECT_DOUBLE_EQ(c.chain.gamma, 1e-4);
  EXPECT_DOUBLE_EQ(c.chain.kappa, 2.5e-4);
  EXPECT_DOUBLE_EQ(c.chain.omega_first().real(), 0.01);
  EXPECT_NEAR(*c.g_rad_per_us, 2.0 * std::numbers::pi * 200.0, 1e-12);
  EXPECT_EQ(c.scan->nodes, (std::vector<int>{2, 3, 4, 5}));
  const auto cl = c.claims();
  ASSERT_TRUE(cl);
  EXPECT_EQ(cl->nodes, 100);
  EXPECT_DOUBLE_EQ(cl->fidelity, 0.88);
}

TEST(Config, PresetFieldsCanBeOverridden) {
  const auto c = parse_config(R"({"experiment": "transfer", "preset": "raman-demo", "chain": {"nodes": 4}})");
  EXPECT_EQ(c.chain.nodes, 4);
  EXPECT_EQ(c.chain.omega_last(), cplx{0.02});
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "preset": "nope"})"), "preset");
}

TEST(Config, UnknownKeysRejectedWithPath) {
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "colour": 1})"), "colour");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "chain": {"detuning": 1}})"), "chain.detuning");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "mcwf": {"n_traj": 4, "sed": 1}})"), "mcwf.sed");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "grid": {"t1": "later"}})"), "grid.t1");
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "chain": {"nodes": 2.5}})"), "chain.nodes");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "chain": {"nodes": 1}})"), "chain.nodes");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "chain": {"omega": [0.1, 0.1]}})"), "chain.omega");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "transfer": {"alpha": 1, "beta": 1}})"), "transfer");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "mcwf": {"seed": -3}})"), "mcwf.seed");
  EXPECT_EQ(key_path_of(R"({"experiment": "teleport"})"), "experiment");
  EXPECT_EQ(key_path_of(R"({})"), "experiment");
  EXPECT_EQ(key_path_of("{not json"), "");
}

TEST(Config, MissingBlocksForExperiment) {
  EXPECT_EQ(key_path_of(R"({"experiment": "fidelity-scan"})"), "scan");
  EXPECT_EQ(key_path_of(R"({"experiment": "stirap"})"), "schedule");
  EXPECT_EQ(key_path_of(R"({"experiment": "transfer", "transfer": {"backend": "mcwf"}})"), "mcwf");
  EXPECT_EQ(key_path_of(R"({"experiment": "compare", "transfer": {"backend": "effective"}})"), "transfer.backend");
}

TEST(Config, CompareDefaultsToLindblad) {
  EXPECT_EQ(parse_config(R"({"experiment": "compare"})").backend, Backend::lindblad);
}

TEST(Config, OverlapScheduleMatchesSequence) {
  const auto c = parse_config(R"({"experiment": "stirap", "preset": "raman-demo",
    "schedule": {"amp1": 0.004, "ampN": 0.004, "width": 8000, "overlap": 0.5},
    "stirap": {"backend": "exact", "intermediate_mode": 0}})");
  EXPECT_EQ(*c.schedule, PulseSchedule::sin2_sequence(0.004, 0.004, 8000.0, 0.5));
  EXPECT_EQ(c.stirap_backend, StirapBackend::exact);
  EXPECT_EQ(c.intermediate_mode, 0);
  EXPECT_EQ(key_path_of(R"({"experiment": "stirap", "schedule": {"amp1": 1, "ampN": 1, "width": 1, "overlap": 0.5,
    "t_center1": 2}})"),
            "schedule.t_center1");
  EXPECT_EQ(key_path_of(R"({"experiment": "stirap", "schedule": {"amp1": 1, "ampN": 1, "width": 8, "overlap": 0.5},
    "stirap": {"intermediate_mode": 7}})"),
            "stirap.intermediate_mode");
}

TEST(Config, DumpRoundTrips) {
  const char* docs[] = {
      R"({"experiment": "transfer"})",
      R"({"experiment": "compare", "preset": "stripline-hardware", "chain": {"nodes": 2, "n_max": 2},
          "grid": {"t0": 0, "t1": 500, "n_steps": 40, "stride": 2}, "transfer": {"alpha": [0, 0.6], "beta": 0.8},
          "integrator": {"dt_scale": 0.02, "step_halving": true}, "output": {"dir": "x/y", "plots": true}})",
      R"({"experiment": "transfer", "chain": {"unit": "2pi*MHz", "g": 200, "delta": 2000, "omega": [1, 0, [0, 2]],
          "boundary": "open", "storage_branching": 0.3, "storage_detuning": "0.1g"},
          "transfer": {"backend": "mcwf"}, "mcwf": {"n_traj": 50, "seed": 18446744073709551615}})",
      R"({"experiment": "fidelity-scan", "scan": {"nodes": [2, 7, 3]}, "effective": {"omega_k_rule": "global"}})",
      R"({"experiment": "stirap", "schedule": {"shape": "gaussian", "amp1": 0.01, "ampN": 0.01,
          "t_center1": 300, "t_centerN": 200, "width": 80, "total_time": 500}, "stirap": {"intermediate_mode": 1}})",
  };
  for (const char* d : docs) {
    const auto c = parse_config(d);
    const auto again = parse_config(dump_config(c));
    EXPECT_EQ(again, c) << dump_config(c);
    EXPECT_EQ(dump_config(again), dump_config(c));
  }
}

TEST(Config, BackendNames) {
  for (auto b : {Backend::schrodinger, Backend::lindblad, Backend::mcwf, Backend::effective})
    EXPECT_EQ(parse_backend(to_string(b)), b);
  EXPECT_THROW(parse_backend("exact"), ConfigError);
  EXPECT_EQ(to_string(ExperimentKind::fidelity_scan), "fidelity-scan");
}

TEST(Config, LoadMissingFile) {
  EXPECT_THROW(load_config("/nonexistent/cfg.json"), ConfigError);
}
