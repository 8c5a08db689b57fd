#pragma once

// Full-system model of the coupled-resonator chain: N nodes, each a
// three-level atom (|0>, |1>, |e>) in a single-mode cavity, in the rotating
// frame where the atom-cavity and laser terms are static and the cavities
// carry the detuning delta. All rates are in units of g unless g != 1 is set
// explicitly.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtransfer/operator_core.hpp"

namespace qtransfer {

enum class Boundary { periodic, open };

/// Basis digit of each atomic level inside the atom factor.
enum AtomLevel : int { kGround = 0, kStorage = 1, kExcited = 2 };

struct ChainParams {
  int nodes = 3;
  double g = 1.0;
  double delta = 10.0;  // omega_c - omega_0
  double j_c = 0.5;
  std::vector<cplx> omega;  // per-node Rabi frequencies; empty means all zero
  double gamma = 0.0;
  double kappa = 0.0;
  int n_max = 1;
  Boundary boundary = Boundary::periodic;
  // Fraction of gamma emitted into |1> instead of |0>.
  double storage_branching = 0.0;
  // Energy of every |1> level in the rotating frame (two-photon detuning of the drive).
  double storage_detuning = 0.0;

  /// Throws DomainError on out-of-range values.
  void validate() const;

  cplx omega_at(int node) const { return omega.empty() ? cplx{0.0} : omega.at(static_cast<std::size_t>(node)); }
  cplx omega_first() const { return omega_at(0); }
  cplx omega_last() const { return omega_at(nodes - 1); }
  SpaceDescriptor space() const { return SpaceDescriptor::chain(nodes, n_max); }

  /// Drives only the first and last node.
  static ChainParams end_driven(int nodes, double delta, double j_c, cplx omega_first, cplx omega_last);

  friend bool operator==(const ChainParams&, const ChainParams&) = default;
};

/// Jump operators, each already scaled by the square root of its rate.
struct LindbladSet {
  std::vector<Operator> operators;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return operators.size(); }
  bool empty() const noexcept { return operators.empty(); }
};

/// Photon hopping bonds (0-based node pairs). The periodic chain adds the
/// wrap bond (N-1, 0) for N >= 3; for N = 2 the two nodes share one bond.
std::vector<std::pair<int, int>> hopping_bonds(const ChainParams& p);

Operator build_hamiltonian(const ChainParams& p);
LindbladSet build_lindblad(const ChainParams& p);

/// Total excitation number: photons + |1> and |e> populations.
Operator excitation_number(const ChainParams& p);

/// (alpha |0>_1 + beta |1>_1) |0...0> |vac>. Rejects |alpha|^2 + |beta|^2 != 1.
State initial_transfer_state(const ChainParams& p, cplx alpha, cplx beta);

/// Basis index with the given atomic levels and photon numbers per node.
Index basis_index(const ChainParams& p, std::span<const int> atom_levels, std::span<const int> photons);
/// All atoms in |0>, all cavities empty.
Index ground_index(const ChainParams& p);
/// Atom `node` (0-based) in `level`, every other atom in |0>, cavities empty.
Index flipped_index(const ChainParams& p, int node, int level);
/// One photon in cavity `node`, all atoms in |0>.
Index photon_index(const ChainParams& p, int node);

}  // namespace qtransfer
