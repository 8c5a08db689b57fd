#pragma once

// Closed-form reduced descriptions of the chain: photon-mediated dipole
// couplings after eliminating the cavity modes, the collective Lambda system
// in the momentum basis, and the two-level Raman model with its decay and
// fidelity estimates. Momentum sums use the periodic convention
// k = 2 pi m / N, m = 0..N-1.

#include <array>
#include <string>
#include <vector>

#include "qtransfer/waveguide_model.hpp"

namespace qtransfer {

/// How the drive strength entering the excited-state decay estimate is chosen.
enum class OmegaKRule {
  pairwise,  // per mode: max(|Omega_1k|, |Omega_2k|)
  global,    // one value: max over all modes and both drives
};

/// Regime checks, each meaning "a >> b" with a factor-of-ten margin.
struct ValidityFlags {
  bool modes_positive = true;      // every delta_k > 0
  bool strong_detuning = false;    // delta >> g
  bool weak_drive = false;         // g^2/delta >> |Omega_i|
  bool low_cavity_loss = false;    // kappa << J_c
  bool low_emission = false;       // gamma << J_c g^2 / delta^2
  bool dispersive_modes = false;   // delta_k >> g for all k
  bool raman_regime = false;       // E_k >> |Omega_1k|, |Omega_2k|
  bool estimate_in_range = false;  // unclamped fidelity estimate within [0, 1]

  bool all() const {
    return modes_positive && strong_detuning && weak_drive && low_cavity_loss && low_emission && dispersive_modes &&
           raman_regime && estimate_in_range;
  }
};

struct EffectiveModel {
  std::vector<double> k;        // mode momenta
  std::vector<double> delta_k;  // cavity mode detunings
  double j0 = 0.0;
  std::vector<double> jl;       // J_l for l = 1..N-1
  std::vector<double> e_k;      // collective excited-mode energies
  std::vector<double> e_k_literal;  // J_0 + sum_{l=1}^{N} 2 J_l cos(k l), reported for comparison
  std::vector<cplx> omega1k, omega2k;
  cplx theta_r{0.0};
  double gamma_e = 0.0;
  double gamma_c = 0.0;
  double t_f = 0.0;
  double f_unclamped = 1.0;
  double f_est = 1.0;
  ValidityFlags flags;
};

std::vector<double> mode_momenta(int nodes);

/// delta_k = delta + 2 J_c cos k. Rejects any delta_k <= 0.
std::vector<double> mode_detunings(const ChainParams& p);

struct DipoleCouplings {
  double j0 = 0.0;
  std::vector<double> jl;  // index l-1 holds J_l, l = 1..N-1

  double at(int l) const { return l == 0 ? j0 : jl.at(static_cast<std::size_t>(l - 1)); }
};

/// J_0 = sum_k g^2/(N delta_k), J_l = sum_k g^2 e^{ikl}/(N delta_k).
DipoleCouplings dipole_couplings(const ChainParams& p);

/// E_k = sum_{l=0}^{N-1} J_l e^{-ikl}; equals g^2/delta_k.
std::vector<double> collective_energies(const ChainParams& p);

/// E_k = J_0 + sum_{l=1}^{N} 2 J_l cos(kl) with J_N := J_0 (wrap), as
/// literally written; double counts the couplings under periodic wrap.
std::vector<double> collective_energies_literal(const ChainParams& p);

/// Sorted eigenvalues of the N x N single-excitation dipole matrix: circulant,
/// diagonal J_0, entry J_l at cyclic distance l.
std::vector<double> vd_eigs_oracle(const ChainParams& p);

struct CollectiveRabi {
  std::vector<cplx> omega1k;
  std::vector<cplx> omega2k;
};

/// Omega_1k = Omega_1 e^{ik}/sqrt(N), Omega_2k = Omega_N e^{iNk}/sqrt(N).
CollectiveRabi collective_rabi(const ChainParams& p);

/// Theta_r = sum_k Omega_1k conj(Omega_2k) / E_k.
cplx raman_rate(const ChainParams& p);

struct TransferAmplitudes {
  cplx ground;       // |0...0>
  cplx first;        // |1_1>
  cplx last;         // |1_N>
};

/// Exact solution of the two-level Raman model at time t.
TransferAmplitudes effective_evolution(cplx alpha, cplx beta, cplx theta_r, double t);

/// diag(1, phase) applied to (c0, c1); the default phase i undoes the -i of
/// the Raman transfer for real positive Theta_r.
std::array<cplx, 2> recovery_gate(cplx c0, cplx c1, cplx phase = cplx{0.0, 1.0});

struct DecayRates {
  double gamma_e = 0.0;
  double gamma_c = 0.0;
};

DecayRates decay_rates(const ChainParams& p, OmegaKRule rule = OmegaKRule::pairwise);

struct FidelityEstimate {
  double t_f = 0.0;
  double f = 1.0;             // clamped to [0, 1]
  double f_unclamped = 1.0;
};

/// t_f = pi / (2 |Theta_r|), F = clamp(1 - (Gamma_E + Gamma_C) t_f, 0, 1). Rejects Theta_r = 0.
FidelityEstimate fidelity_estimate(const ChainParams& p, OmegaKRule rule = OmegaKRule::pairwise);

ValidityFlags validity_flags(const ChainParams& p);

/// Everything above in one pass. Does not throw for Theta_r = 0 (t_f = +inf)
/// or for invalid regimes; those show up in `flags`.
EffectiveModel compute_effective_model(const ChainParams& p, OmegaKRule rule = OmegaKRule::pairwise);

}  // namespace qtransfer
