#pragma once

// Experiment pipelines driven by an ExperimentConfig: state transfer with
// fidelity, exact-vs-effective comparison, fidelity scans over chain length
// and adiabatic passage runs. Nothing here touches the filesystem; see
// report_io.hpp for emission.

#include <optional>
#include <vector>

#include "qtransfer/dynamics.hpp"
#include "qtransfer/effective_model.hpp"
#include "qtransfer/experiment_config.hpp"

namespace qtransfer {

/// <psi|U rho U^dagger|psi> with psi = alpha|0> + beta|1> and U = diag(1, gate_phase).
/// rho is a qubit, or a qutrit whose {|0>, |1>} block is used. Pass
/// gate_phase = 1 for no gate. Rejects matrices that are not valid density matrices.
double transfer_fidelity(const State& rho, cplx alpha, cplx beta, cplx gate_phase = cplx{0.0, 1.0});
double transfer_fidelity(const State& rho, cplx alpha, cplx beta, bool apply_gate);

/// The chain with only its end nodes driven, resized to `nodes`.
ChainParams resize_chain(const ChainParams& p, int nodes);

/// Grid with t1 replaced by the transfer time when the config asks for it.
TimeGrid resolved_grid(const ExperimentConfig& cfg, const EffectiveModel& model);

/// Effective-model population curves: P_1_1, P_1_N, P_0 on the grid.
TrajectoryResult effective_curves(const ChainParams& p, cplx alpha, cplx beta, const TimeGrid& grid,
                                  OmegaKRule rule = OmegaKRule::pairwise);

/// Transfer time pi / |E_a - E_b| of the full closed model, where E_a, E_b are
/// the two eigenstates carrying most of the |1_1>, |1_N> weight. Infinite when
/// they are degenerate.
double exact_transfer_time(const ChainParams& p);

struct TransferOutput {
  EffectiveModel model;
  TrajectoryResult curves;
  State final_atom;                 // reduced state of the last atom at t1, before any gate
  double fidelity_gate = 0.0;       // with U = diag(1, i)
  double fidelity_calibrated = 0.0; // with the phase measured from a |+> run
  cplx calibrated_phase{1.0};
  double fidelity_no_gate = 0.0;
};

TransferOutput run_transfer(const ExperimentConfig& cfg);

struct CompareSummary {
  double max_dev_first = 0.0;  // max |P_1_1 exact - effective|
  double max_dev_last = 0.0;
  double mean_dev_first = 0.0;
  double mean_dev_last = 0.0;
  double peak_leakage = 0.0;
  double final_first = 0.0;    // exact populations at the last time
  double final_last = 0.0;
  double t_f = 0.0;
  cplx theta_r{0.0};
  /// Time of the largest exact P_1_N on the grid; a direct read of the transfer time when the grid extends past it.
  double measured_t_f = 0.0;
};

struct CompareOutput {
  EffectiveModel model;
  TrajectoryResult exact;
  TrajectoryResult effective;
  CompareSummary summary;
};

/// Rejects the master-equation backend when the chain exceeds the dimension budget.
CompareOutput run_compare(const ExperimentConfig& cfg);

struct FidelityRow {
  int nodes = 0;
  cplx theta_r{0.0};
  double t_f = 0.0;
  double t_f_us = 0.0;  // NaN without a physical scale
  double gamma_e = 0.0;
  double gamma_c = 0.0;
  double f_est = 0.0;
  double f_unclamped = 0.0;
  ValidityFlags flags;
};

struct ClaimComparison {
  int nodes = 0;
  double computed_f = 0.0;
  double claimed_f = 0.0;
  double computed_t_f_us = 0.0;
  double claimed_t_f_us = 0.0;
  bool fidelity_agrees = false;  // within 0.02 absolute
  bool time_agrees = false;      // within a factor of 2
};

struct FidelityReport {
  std::vector<FidelityRow> rows;  // sorted by nodes
  std::optional<ClaimComparison> claims;
  bool nonincreasing = true;
  double max_increase = 0.0;      // largest F(N+1) - F(N) over consecutive rows
  int max_increase_at = 0;        // nodes value of the row where it occurs
};

/// Rows are computed concurrently; the report depends only on the config.
FidelityReport run_fidelity_scan(const ExperimentConfig& cfg);

struct StirapOutput {
  TrajectoryResult curves;
  int intermediate_mode = 0;
  double final_transfer = 0.0;
  double peak_upper = 0.0;  // largest population outside {|1_1>, |1_N>, |0>}
};

StirapOutput run_stirap_experiment(const ExperimentConfig& cfg);

/// Largest dimension the master-equation backend accepts.
inline constexpr Index kLindbladDimensionBudget = 512;

}  // namespace qtransfer
