#pragma once

// Experiment configuration: a JSON document with strict key checking.
// Rates are given either in units of g or in a physical frequency unit named
// by `chain.unit`; everything is converted to g = 1 on load. Times are always
// in units of 1/g. The full grammar is documented in README.md.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtransfer/dynamics.hpp"
#include "qtransfer/effective_model.hpp"
#include "qtransfer/stirap.hpp"
#include "qtransfer/waveguide_model.hpp"

namespace qtransfer {

enum class ExperimentKind { transfer, compare, fidelity_scan, stirap };
enum class Backend { schrodinger, lindblad, mcwf, effective };

struct McwfSettings {
  int n_traj = 1000;
  std::uint64_t seed = 1;
  friend bool operator==(const McwfSettings&, const McwfSettings&) = default;
};

struct ScanSettings {
  std::vector<int> nodes;
  friend bool operator==(const ScanSettings&, const ScanSettings&) = default;
};

struct IntegratorSettings {
  double dt = 0.0;
  double dt_scale = 0.01;
  bool step_halving = false;
  bool reduce = true;
  friend bool operator==(const IntegratorSettings&, const IntegratorSettings&) = default;

  IntegratorOptions options() const;
};

struct OutputSettings {
  std::string dir = "out";
  bool plots = false;
  friend bool operator==(const OutputSettings&, const OutputSettings&) = default;
};

/// Reported values shipped with a named preset, compared against computed ones.
struct PresetClaims {
  int nodes = 0;
  double fidelity = 0.0;
  double t_f_us = 0.0;
  friend bool operator==(const PresetClaims&, const PresetClaims&) = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::transfer;
  std::string preset;  // empty when no preset was used
  ChainParams chain;
  std::optional<double> g_rad_per_us;  // physical scale of g, when known
  TimeGrid grid{0.0, 1.0, 400, 1};
  bool grid_auto_end = true;  // t1 = transfer time t_f
  Backend backend = Backend::schrodinger;
  cplx alpha{1.0 / 1.4142135623730951};
  cplx beta{1.0 / 1.4142135623730951};
  std::optional<McwfSettings> mcwf;
  std::optional<ScanSettings> scan;
  std::optional<PulseSchedule> schedule;
  StirapBackend stirap_backend = StirapBackend::effective;
  std::optional<int> intermediate_mode;
  OmegaKRule omega_k_rule = OmegaKRule::pairwise;
  IntegratorSettings integrator;
  OutputSettings output;

  /// Cross-block consistency checks; throws ConfigError.
  void validate() const;
  std::optional<PresetClaims> claims() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Named parameter sets: "raman-demo" (delta 10g, J_c 0.5g, end drives 0.02g,
/// N = 3), "raman-demo-weak" (end drives 0.01g), "stripline-hardware"
/// (g = 2pi x 200 MHz, delta = 2pi x 2 GHz, J_c = 2pi x 100 MHz,
/// gamma = 2pi x 20 kHz, kappa = 2pi x 50 kHz, end drives 2pi x 2 MHz).
std::vector<std::string> preset_names();

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
/// Resolved configuration in g units; parse_config(dump_config(c)) == c.
std::string dump_config(const ExperimentConfig& cfg, int indent = 2);

std::string to_string(ExperimentKind k);
std::string to_string(Backend b);
Backend parse_backend(std::string_view s);

}  // namespace qtransfer
