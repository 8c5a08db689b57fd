#include "qtransfer/waveguide_model.hpp"

#include <cmath>
#include <string>

namespace qtransfer {

void ChainParams::validate() const {
  if (nodes < 2) throw DomainError("chain needs at least 2 nodes, got " + std::to_string(nodes));
  if (n_max < 1) throw DomainError("n_max must be >= 1");
  if (!(g >= 0.0) || !(j_c >= 0.0) || !(gamma >= 0.0) || !(kappa >= 0.0))
    throw DomainError("rates g, j_c, gamma, kappa must be non-negative");
  if (!std::isfinite(delta) || !std::isfinite(storage_detuning)) throw DomainError("detunings must be finite");
  if (!omega.empty() && static_cast<int>(omega.size()) != nodes)
    throw DomainError("omega must have one entry per node (" + std::to_string(nodes) + "), got " +
                      std::to_string(omega.size()));
  if (!(storage_branching >= 0.0 && storage_branching <= 1.0)) throw DomainError("storage_branching must lie in [0, 1]");
}

ChainParams ChainParams::end_driven(int nodes, double delta, double j_c, cplx omega_first, cplx omega_last) {
  ChainParams p;
  p.nodes = nodes;
  p.delta = delta;
  p.j_c = j_c;
  p.omega.assign(static_cast<std::size_t>(std::max(nodes, 0)), cplx{0.0});
  if (nodes >= 1) p.omega.front() = omega_first;
  if (nodes >= 2) p.omega.back() = omega_last;
  return p;
}

std::vector<std::pair<int, int>> hopping_bonds(const ChainParams& p) {
  std::vector<std::pair<int, int>> bonds;
  for (int j = 0; j + 1 < p.nodes; ++j) bonds.emplace_back(j, j + 1);
  if (p.boundary == Boundary::periodic && p.nodes >= 3) bonds.emplace_back(p.nodes - 1, 0);
  return bonds;
}

namespace {

struct LocalOps {
  Operator a, a_dag, n_photon;
  Operator sigma_0e, sigma_e1, proj_1, proj_e;
};

LocalOps local_ops(int n_max) {
  LocalOps l;
  l.a = annihilation(n_max);
  l.a_dag = l.a.adjoint();
  l.n_photon = l.a_dag * l.a;
  l.sigma_0e = transition(3, kGround, kExcited, FactorKind::atom);
  l.sigma_e1 = transition(3, kExcited, kStorage, FactorKind::atom);
  l.proj_1 = transition(3, kStorage, kStorage, FactorKind::atom);
  l.proj_e = transition(3, kExcited, kExcited, FactorKind::atom);
  return l;
}

}  // namespace

Operator build_hamiltonian(const ChainParams& p) {
  p.validate();
  const auto space = p.space();
  const auto l = local_ops(p.n_max);
  Operator h = Operator::zero(space);

  std::vector<Operator> a(static_cast<std::size_t>(p.nodes));
  for (int j = 0; j < p.nodes; ++j) a[j] = embed(l.a, SpaceDescriptor::cavity_factor(j), space);

  for (int j = 0; j < p.nodes; ++j) {
    const auto atom = SpaceDescriptor::atom_factor(j);
    const Operator a_dag = a[j].adjoint();
    h += cplx{p.delta} * (a_dag * a[j]);

    const Operator jc = p.g * (a_dag * embed(l.sigma_0e, atom, space));
    h += jc + jc.adjoint();

    const cplx om = p.omega_at(j);
    if (om != cplx{0.0}) {
      const Operator drive = om * embed(l.sigma_e1, atom, space);
      h += drive + drive.adjoint();
    }
    if (p.storage_detuning != 0.0) h += cplx{p.storage_detuning} * embed(l.proj_1, atom, space);
  }

  if (p.j_c != 0.0) {
    for (auto [i, k] : hopping_bonds(p)) {
      const Operator hop = cplx{p.j_c} * (a[i].adjoint() * a[k]);
      h += hop + hop.adjoint();
    }
  }
  return h;
}

LindbladSet build_lindblad(const ChainParams& p) {
  p.validate();
  const auto space = p.space();
  const auto l = local_ops(p.n_max);
  LindbladSet set;
  const double gamma_0 = p.gamma * (1.0 - p.storage_branching);
  const double gamma_1 = p.gamma * p.storage_branching;
  const auto sigma_1e = transition(3, kStorage, kExcited, FactorKind::atom);
  for (int j = 0; j < p.nodes; ++j) {
    const auto label = std::to_string(j + 1);
    if (p.kappa > 0.0) {
      set.operators.push_back(std::sqrt(p.kappa) * embed(l.a, SpaceDescriptor::cavity_factor(j), space));
      set.labels.push_back("cavity_decay_" + label);
    }
    if (gamma_0 > 0.0) {
      set.operators.push_back(std::sqrt(gamma_0) * embed(l.sigma_0e, SpaceDescriptor::atom_factor(j), space));
      set.labels.push_back("emission_" + label);
    }
    if (gamma_1 > 0.0) {
      set.operators.push_back(std::sqrt(gamma_1) * embed(sigma_1e, SpaceDescriptor::atom_factor(j), space));
      set.labels.push_back("emission_to_storage_" + label);
    }
  }
  return set;
}

Operator excitation_number(const ChainParams& p) {
  const auto space = p.space();
  const auto l = local_ops(p.n_max);
  Operator n = Operator::zero(space);
  for (int j = 0; j < p.nodes; ++j) {
    n += embed(l.n_photon, SpaceDescriptor::cavity_factor(j), space);
    n += embed(l.proj_1, SpaceDescriptor::atom_factor(j), space);
    n += embed(l.proj_e, SpaceDescriptor::atom_factor(j), space);
  }
  return n;
}

Index basis_index(const ChainParams& p, std::span<const int> atom_levels, std::span<const int> photons) {
  if (static_cast<int>(atom_levels.size()) != p.nodes || static_cast<int>(photons.size()) != p.nodes)
    throw DimensionError("basis_index: need one atom level and one photon number per node");
  std::vector<int> digits;
  digits.reserve(2 * atom_levels.size());
  for (int j = 0; j < p.nodes; ++j) {
    digits.push_back(atom_levels[j]);
    digits.push_back(photons[j]);
  }
  return p.space().index_of(digits);
}

Index ground_index(const ChainParams&) { return 0; }

Index flipped_index(const ChainParams& p, int node, int level) {
  std::vector<int> levels(static_cast<std::size_t>(p.nodes), kGround), photons(levels.size(), 0);
  levels.at(static_cast<std::size_t>(node)) = level;
  return basis_index(p, levels, photons);
}

Index photon_index(const ChainParams& p, int node) {
  std::vector<int> levels(static_cast<std::size_t>(p.nodes), kGround), photons(levels.size(), 0);
  photons.at(static_cast<std::size_t>(node)) = 1;
  return basis_index(p, levels, photons);
}

State initial_transfer_state(const ChainParams& p, cplx alpha, cplx beta) {
  p.validate();
  const double n2 = std::norm(alpha) + std::norm(beta);
  if (std::abs(n2 - 1.0) > 1e-9) throw DomainError("|alpha|^2 + |beta|^2 must equal 1, got " + std::to_string(n2));
  const auto space = p.space();
  VectorXc psi = VectorXc::Zero(space.dimension());
  psi(ground_index(p)) = alpha;
  psi(flipped_index(p, 0, kStorage)) = beta;
  return State::pure(space, std::move(psi));
}

}  // namespace qtransfer
