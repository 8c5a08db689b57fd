#pragma once

// Time evolution backends: Schrodinger, Lindblad master equation and Monte
// Carlo wave-function trajectories (quantum jumps). All backends share the
// fixed-step fourth-order Runge-Kutta scheme; for time-independent generators
// the RK4 step is applied as its exact step matrix raised to the required
// power. States are first restricted to the basis states reachable from the
// initial support through the Hamiltonian and jump operators, which is exact.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtransfer/operator_core.hpp"
#include "qtransfer/waveguide_model.hpp"

namespace qtransfer {

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  int n_steps = 100;  // grid intervals
  int stride = 1;     // record every stride-th grid point (the last point is always recorded)

  void validate() const;
  double spacing() const { return (t1 - t0) / n_steps; }
  /// Indices of recorded grid points.
  std::vector<int> recorded_points() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

struct Observable {
  std::string name;
  Operator op;
};

struct TrajectoryResult {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // values[observable][time]
  std::vector<std::vector<double>> errors;  // standard errors, same shape, empty for deterministic runs
  int n_traj = 1;
  std::map<std::string, std::string> metadata;
  std::optional<State> final_reduced;  // set when IntegratorOptions::keep_final is nonempty
  std::optional<double> step_halving_diff;

  const std::vector<double>& series(std::string_view name) const;
  const std::vector<double>* standard_error(std::string_view name) const;
  bool has(std::string_view name) const;
};

struct IntegratorOptions {
  double dt = 0.0;            // 0 selects dt_scale / ||generator||
  double dt_scale = 0.01;
  bool reduce_to_reachable = true;
  double max_norm_drift = 1e-6;
  std::vector<std::size_t> keep_final;  // factors kept in final_reduced
  bool step_halving_check = false;
  unsigned threads = 0;       // MCWF workers, 0 = hardware concurrency
};

TrajectoryResult evolve_schrodinger(const Operator& h, const State& psi0, const TimeGrid& grid,
                                    const std::vector<Observable>& observables, const IntegratorOptions& opt = {});

TrajectoryResult evolve_lindblad(const Operator& h, const LindbladSet& jumps, const State& rho0, const TimeGrid& grid,
                                 const std::vector<Observable>& observables, const IntegratorOptions& opt = {});

TrajectoryResult evolve_mcwf(const Operator& h, const LindbladSet& jumps, const State& psi0, const TimeGrid& grid,
                             int n_traj, std::uint64_t seed, const std::vector<Observable>& observables,
                             const IntegratorOptions& opt = {});

/// H(t) = static_part + sum_d (f_d(t) C_d + conj(f_d(t)) C_d^dagger).
struct DrivenHamiltonian {
  struct Drive {
    Operator coupling;
    std::function<cplx(double)> envelope;
    double peak = 0.0;  // max |envelope|, used for step-size selection
  };
  Operator static_part;
  std::vector<Drive> drives;
};

TrajectoryResult evolve_schrodinger_driven(const DrivenHamiltonian& h, const State& psi0, const TimeGrid& grid,
                                           const std::vector<Observable>& observables,
                                           const IntegratorOptions& opt = {});

/// P(|1_j>) for every node j, P(|0>), total excited population, total photon
/// number, and leakage = excited + photons. Names: P_1_<j>, P_0, excited,
/// photons, leakage.
std::vector<Observable> standard_observables(const ChainParams& p);

/// Basis indices reachable from `seeds` through nonzero matrix elements of the generators.
std::vector<Index> reachable_basis(const std::vector<const Operator*>& generators, std::vector<Index> seeds);

/// Pairwise (cascade) summation; result is independent of thread scheduling.
double pairwise_sum(std::span<const double> xs);

}  // namespace qtransfer
