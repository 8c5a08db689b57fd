#include "qtransfer/stirap.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace qtransfer {

void PulseSchedule::validate() const {
  if (!(amp1 >= 0.0) || !(ampN >= 0.0)) throw DomainError("pulse amplitudes must be non-negative");
  if (!(width > 0.0)) throw DomainError("pulse width must be positive");
  if (!(total_time > 0.0)) throw DomainError("total_time must be positive");
}

double PulseSchedule::envelope(double amp, double center, double t) const {
  const double x = t - center;
  if (shape == PulseShape::gaussian) return amp * std::exp(-(x / width) * (x / width));
  if (std::abs(x) > 0.5 * width) return 0.0;
  const double s = std::sin(std::numbers::pi * (x + 0.5 * width) / width);
  return amp * s * s;
}

PulseSchedule PulseSchedule::reversed() const {
  PulseSchedule r = *this;
  std::swap(r.t_center1, r.t_centerN);
  return r;
}

PulseSchedule PulseSchedule::sin2_sequence(double amp1, double ampN, double width, double overlap) {
  if (!(overlap >= 0.0 && overlap < 1.0)) throw DomainError("pulse overlap must lie in [0, 1)");
  PulseSchedule s;
  s.shape = PulseShape::sin2;
  s.amp1 = amp1;
  s.ampN = ampN;
  s.width = width;
  s.t_centerN = 0.5 * width;
  s.t_center1 = 0.5 * width + (1.0 - overlap) * width;
  s.total_time = width * (2.0 - overlap);
  s.validate();
  return s;
}

int select_intermediate_mode(const ChainParams& p) {
  const auto e = collective_energies(p);
  int best = 0;
  double best_gap = -1.0;
  for (std::size_t m = 0; m < e.size(); ++m) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < e.size(); ++n)
      if (n != m) gap = std::min(gap, std::abs(e[m] - e[n]));
    if (gap > best_gap + 1e-15) {
      best_gap = gap;
      best = static_cast<int>(m);
    }
  }
  return best;
}

namespace {

std::pair<cplx, cplx> mode_couplings(cplx omega1, cplx omegaN, const ChainParams& p, int mode) {
  if (mode < 0 || mode >= p.nodes) throw DomainError("intermediate mode index out of range");
  const double k = 2.0 * std::numbers::pi * mode / p.nodes;
  const double norm = std::sqrt(static_cast<double>(p.nodes));
  return {omega1 * std::polar(1.0, k) / norm, omegaN * std::polar(1.0, k * p.nodes) / norm};
}

}  // namespace

State dark_state(cplx omega1, cplx omegaN, const ChainParams& p, int mode) {
  if (omega1 == cplx{0.0} && omegaN == cplx{0.0}) throw DomainError("dark state undefined with both drives off");
  const auto [c1, c2] = mode_couplings(omega1, omegaN, p, mode);
  VectorXc v(2);
  v << c2, -c1;
  v.normalize();
  return State::pure(SpaceDescriptor::qudits({2}), v);
}

State bright_state(cplx omega1, cplx omegaN, const ChainParams& p, int mode) {
  if (omega1 == cplx{0.0} && omegaN == cplx{0.0}) throw DomainError("bright state undefined with both drives off");
  const auto [c1, c2] = mode_couplings(omega1, omegaN, p, mode);
  VectorXc v(2);
  v << std::conj(c1), std::conj(c2);
  v.normalize();
  return State::pure(SpaceDescriptor::qudits({2}), v);
}

namespace {

Operator projector(const SpaceDescriptor& space, Index i) {
  SparseXc s(space.dimension(), space.dimension());
  s.insert(i, i) = cplx{1.0};
  return Operator(space, std::move(s));
}

TrajectoryResult run_effective(const ChainParams& p, const PulseSchedule& sched, const TimeGrid& grid, int mode,
                               const IntegratorOptions& iopt) {
  const int n = p.nodes;
  const auto e = collective_energies(p);
  const auto k = mode_momenta(n);
  // Basis: 0 = |1_1>, 1..N = |k_m>, N+1 = |1_N>.
  const auto space = SpaceDescriptor::qudits({n + 2});
  const Index dim = n + 2;
  MatrixXc h0 = MatrixXc::Zero(dim, dim);
  MatrixXc c1 = MatrixXc::Zero(dim, dim), cn = MatrixXc::Zero(dim, dim);
  const double norm = std::sqrt(static_cast<double>(n));
  for (int m = 0; m < n; ++m) {
    h0(m + 1, m + 1) = e[m] - e[mode];
    c1(m + 1, 0) = std::polar(1.0, k[m]) / norm;
    cn(m + 1, n + 1) = std::polar(1.0, k[m] * n) / norm;
  }
  DrivenHamiltonian h;
  h.static_part = Operator(space, h0);
  h.drives.push_back({Operator(space, c1), [sched](double t) { return cplx{sched.omega1(t)}; }, sched.amp1});
  h.drives.push_back({Operator(space, cn), [sched](double t) { return cplx{sched.omegaN(t)}; }, sched.ampN});

  std::vector<Observable> obs{{"P_1_1", projector(space, 0)}, {"P_1_N", projector(space, n + 1)}};
  Operator upper = Operator::zero(space);
  for (int m = 0; m < n; ++m) upper += projector(space, m + 1);
  obs.push_back({"upper", upper});

  auto r = evolve_schrodinger_driven(h, State::basis(space, 0), grid, obs, iopt);
  r.metadata["stirap_backend"] = "effective";
  return r;
}

TrajectoryResult run_exact(const ChainParams& p_in, const PulseSchedule& sched, const TimeGrid& grid, int mode,
                           const IntegratorOptions& iopt) {
  ChainParams p = p_in;
  p.omega.clear();
  // In the simulation frame the dressed collective mode sits at the lower
  // eigenvalue of the (|e>, photon) block of mode k; detune |1> onto it.
  const auto d = mode_detunings(p);
  const double dk = d[static_cast<std::size_t>(mode)];
  p.storage_detuning = 0.5 * (dk - std::sqrt(dk * dk + 4.0 * p.g * p.g));

  const auto space = p.space();
  const auto sigma_e1 = transition(3, kExcited, kStorage, FactorKind::atom);
  DrivenHamiltonian h;
  h.static_part = build_hamiltonian(p);
  h.drives.push_back({embed(sigma_e1, SpaceDescriptor::atom_factor(0), space),
                      [sched](double t) { return cplx{sched.omega1(t)}; }, sched.amp1});
  h.drives.push_back({embed(sigma_e1, SpaceDescriptor::atom_factor(p.nodes - 1), space),
                      [sched](double t) { return cplx{sched.omegaN(t)}; }, sched.ampN});

  std::vector<Observable> obs;
  auto std_obs = standard_observables(p);
  obs.push_back({"P_1_1", std_obs.front().op});
  obs.push_back({"P_1_N", std_obs[static_cast<std::size_t>(p.nodes - 1)].op});
  for (std::size_t i = static_cast<std::size_t>(p.nodes); i < std_obs.size(); ++i) obs.push_back(std_obs[i]);

  auto r = evolve_schrodinger_driven(h, State::basis(space, flipped_index(p, 0, kStorage)), grid, obs, iopt);
  r.metadata["stirap_backend"] = "exact";
  r.metadata["storage_detuning"] = std::to_string(p.storage_detuning);
  return r;
}

}  // namespace

TrajectoryResult run_stirap(const ChainParams& p, const PulseSchedule& schedule, const TimeGrid& grid,
                            StirapBackend backend, const StirapOptions& opt) {
  p.validate();
  schedule.validate();
  const int mode = opt.intermediate_mode.value_or(select_intermediate_mode(p));
  if (mode < 0 || mode >= p.nodes) throw DomainError("intermediate mode index out of range");
  auto r = backend == StirapBackend::effective ? run_effective(p, schedule, grid, mode, opt.integrator)
                                               : run_exact(p, schedule, grid, mode, opt.integrator);
  r.metadata["intermediate_mode"] = std::to_string(mode);
  r.metadata["counterintuitive"] = schedule.counterintuitive() ? "true" : "false";
  return r;
}

}  // namespace qtransfer
