#pragma once

// Adiabatic passage between |1_1> and |1_N> through one collective excited
// mode, with counterintuitively ordered pulses (the last-node drive first).

#include <optional>

#include "qtransfer/dynamics.hpp"
#include "qtransfer/effective_model.hpp"

namespace qtransfer {

enum class PulseShape { sin2, gaussian };

/// Two pulse envelopes. sin2: A sin^2(pi (t - t_c + w/2) / w) on |t - t_c| <= w/2,
/// zero outside. gaussian: A exp(-((t - t_c) / w)^2).
struct PulseSchedule {
  PulseShape shape = PulseShape::sin2;
  double amp1 = 0.0;  // drive on the first node
  double ampN = 0.0;  // drive on the last node
  double t_center1 = 0.0;
  double t_centerN = 0.0;
  double width = 1.0;
  double total_time = 1.0;

  void validate() const;
  bool counterintuitive() const { return t_centerN < t_center1; }
  double omega1(double t) const { return envelope(amp1, t_center1, t); }
  double omegaN(double t) const { return envelope(ampN, t_centerN, t); }
  /// Same pulses with the two centers exchanged.
  PulseSchedule reversed() const;

  /// sin^2 pulses of full support `width`, the last-node pulse first, overlapping by `overlap` of the width.
  static PulseSchedule sin2_sequence(double amp1, double ampN, double width, double overlap = 0.5);

  friend bool operator==(const PulseSchedule&, const PulseSchedule&) = default;

 private:
  double envelope(double amp, double center, double t) const;
};

/// Mode whose energy is farthest from every other mode energy (ties: lowest index).
int select_intermediate_mode(const ChainParams& p);

/// Dark state of the Lambda system through mode `mode`, as amplitudes on
/// (|1_1>, |1_N>): proportional to Omega_2k |1_1> - Omega_1k |1_N>.
State dark_state(cplx omega1, cplx omegaN, const ChainParams& p, int mode);

/// Bright partner orthogonal to dark_state.
State bright_state(cplx omega1, cplx omegaN, const ChainParams& p, int mode);

enum class StirapBackend { effective, exact };

struct StirapOptions {
  std::optional<int> intermediate_mode;  // default: select_intermediate_mode
  IntegratorOptions integrator;
};

/// Drives the chain from |1_1> with the schedule. Series: P_1_1, P_1_N, plus
/// `upper` (collective-mode population) in effective mode, or the standard
/// chain observables in exact mode. Lasers are detuned so the lower states are
/// resonant with the selected mode.
TrajectoryResult run_stirap(const ChainParams& p, const PulseSchedule& schedule, const TimeGrid& grid,
                            StirapBackend backend, const StirapOptions& opt = {});

}  // namespace qtransfer
