#include "qtransfer/effective_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qtransfer {

namespace {

constexpr double kImagTolerance = 1e-12;

std::vector<double> raw_detunings(const ChainParams& p) {
  const auto k = mode_momenta(p.nodes);
  std::vector<double> d(k.size());
  for (std::size_t m = 0; m < k.size(); ++m) d[m] = p.delta + 2.0 * p.j_c * std::cos(k[m]);
  return d;
}

// sum_k g^2 e^{ikl} / (N delta_k)
cplx coupling_sum(const ChainParams& p, const std::vector<double>& k, const std::vector<double>& d, int l) {
  cplx s{0.0};
  const double n = static_cast<double>(p.nodes);
  for (std::size_t m = 0; m < k.size(); ++m) s += p.g * p.g * std::polar(1.0, k[m] * l) / (n * d[m]);
  return s;
}

double checked_real(cplx v, const char* what) {
  if (std::abs(v.imag()) > kImagTolerance * std::max(1.0, std::abs(v.real())))
    throw DomainError(std::string(what) + " has a non-negligible imaginary part");
  return v.real();
}

std::vector<double> energies_from(const ChainParams& p, const std::vector<double>& k, const DipoleCouplings& c) {
  std::vector<double> e(k.size());
  for (std::size_t m = 0; m < k.size(); ++m) {
    cplx s{0.0};
    for (int l = 0; l < p.nodes; ++l) s += c.at(l) * std::polar(1.0, -k[m] * l);
    e[m] = checked_real(s, "E_k");
  }
  return e;
}

cplx raman_sum(const CollectiveRabi& r, const std::vector<double>& e) {
  cplx theta{0.0};
  for (std::size_t m = 0; m < e.size(); ++m) theta += r.omega1k[m] * std::conj(r.omega2k[m]) / e[m];
  return theta;
}

DecayRates decay_from(const ChainParams& p, const CollectiveRabi& r, const std::vector<double>& e,
                      const std::vector<double>& d, OmegaKRule rule) {
  const double n = static_cast<double>(p.nodes);
  double global = 0.0;
  for (std::size_t m = 0; m < e.size(); ++m)
    global = std::max({global, std::abs(r.omega1k[m]), std::abs(r.omega2k[m])});
  DecayRates out;
  for (std::size_t m = 0; m < e.size(); ++m) {
    const double om =
        rule == OmegaKRule::pairwise ? std::max(std::abs(r.omega1k[m]), std::abs(r.omega2k[m])) : global;
    out.gamma_e += std::pow(om / e[m], 2) * p.gamma;
    out.gamma_c += std::pow(p.g / (std::sqrt(n) * d[m]), 2) * p.kappa;
  }
  return out;
}

}  // namespace

std::vector<double> mode_momenta(int nodes) {
  if (nodes < 1) throw DomainError("need at least one mode");
  std::vector<double> k(static_cast<std::size_t>(nodes));
  for (int m = 0; m < nodes; ++m) k[m] = 2.0 * std::numbers::pi * m / nodes;
  return k;
}

std::vector<double> mode_detunings(const ChainParams& p) {
  if (p.nodes < 2) throw DomainError("mode_detunings needs N >= 2");
  auto d = raw_detunings(p);
  for (double v : d)
    if (!(v > 0.0)) throw DomainError("mode detuning delta_k <= 0: photon elimination is invalid");
  return d;
}

DipoleCouplings dipole_couplings(const ChainParams& p) {
  const auto d = mode_detunings(p);
  const auto k = mode_momenta(p.nodes);
  DipoleCouplings c;
  c.j0 = checked_real(coupling_sum(p, k, d, 0), "J_0");
  for (int l = 1; l < p.nodes; ++l) c.jl.push_back(checked_real(coupling_sum(p, k, d, l), "J_l"));
  return c;
}

std::vector<double> collective_energies(const ChainParams& p) {
  return energies_from(p, mode_momenta(p.nodes), dipole_couplings(p));
}

std::vector<double> collective_energies_literal(const ChainParams& p) {
  const auto d = mode_detunings(p);
  const auto k = mode_momenta(p.nodes);
  const auto c = dipole_couplings(p);
  std::vector<double> e(k.size());
  for (std::size_t m = 0; m < k.size(); ++m) {
    double s = c.j0;
    for (int l = 1; l <= p.nodes; ++l) {
      const double jl = checked_real(coupling_sum(p, k, d, l), "J_l");
      s += 2.0 * jl * std::cos(k[m] * l);
    }
    e[m] = s;
  }
  return e;
}

std::vector<double> vd_eigs_oracle(const ChainParams& p) {
  if (p.nodes < 2) throw DomainError("vd_eigs_oracle needs N >= 2");
  const auto c = dipole_couplings(p);
  const int n = p.nodes;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    m(j, j) = c.j0;
    for (int l = 1; l < n; ++l) m(j, (j + l) % n) = c.at(l);
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  std::vector<double> out;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cplx ev = es.eigenvalues()(i);
    out.push_back(checked_real(ev, "dipole-matrix eigenvalue"));
  }
  std::sort(out.begin(), out.end());
  return out;
}

CollectiveRabi collective_rabi(const ChainParams& p) {
  if (p.nodes < 2) throw DomainError("collective_rabi needs N >= 2");
  const auto k = mode_momenta(p.nodes);
  const double norm = std::sqrt(static_cast<double>(p.nodes));
  CollectiveRabi r;
  for (double km : k) {
    r.omega1k.push_back(p.omega_first() * std::polar(1.0, km) / norm);
    r.omega2k.push_back(p.omega_last() * std::polar(1.0, km * p.nodes) / norm);
  }
  return r;
}

cplx raman_rate(const ChainParams& p) {
  const auto e = collective_energies(p);
  for (double v : e)
    if (v == 0.0) throw DomainError("collective energy E_k = 0: Raman elimination undefined");
  return raman_sum(collective_rabi(p), e);
}

TransferAmplitudes effective_evolution(cplx alpha, cplx beta, cplx theta_r, double t) {
  const double n2 = std::norm(alpha) + std::norm(beta);
  if (std::abs(n2 - 1.0) > 1e-9) throw DomainError("|alpha|^2 + |beta|^2 must equal 1");
  const double rate = std::abs(theta_r);
  const double phase = rate > 0.0 ? std::arg(theta_r) : 0.0;
  const cplx minus_i{0.0, -1.0};
  return {alpha, beta * std::cos(rate * t), minus_i * std::polar(1.0, phase) * beta * std::sin(rate * t)};
}

std::array<cplx, 2> recovery_gate(cplx c0, cplx c1, cplx phase) { return {c0, phase * c1}; }

DecayRates decay_rates(const ChainParams& p, OmegaKRule rule) {
  const auto d = mode_detunings(p);
  const auto e = collective_energies(p);
  return decay_from(p, collective_rabi(p), e, d, rule);
}

FidelityEstimate fidelity_estimate(const ChainParams& p, OmegaKRule rule) {
  const cplx theta = raman_rate(p);
  if (std::abs(theta) == 0.0) throw DomainError("Raman rate is zero: transfer time undefined");
  const auto rates = decay_rates(p, rule);
  FidelityEstimate f;
  f.t_f = std::numbers::pi / (2.0 * std::abs(theta));
  f.f_unclamped = 1.0 - (rates.gamma_e + rates.gamma_c) * f.t_f;
  f.f = std::clamp(f.f_unclamped, 0.0, 1.0);
  return f;
}

ValidityFlags validity_flags(const ChainParams& p) {
  return compute_effective_model(p).flags;
}

EffectiveModel compute_effective_model(const ChainParams& p, OmegaKRule rule) {
  p.validate();
  EffectiveModel em;
  em.k = mode_momenta(p.nodes);
  em.delta_k = raw_detunings(p);
  auto& fl = em.flags;
  fl.modes_positive = std::all_of(em.delta_k.begin(), em.delta_k.end(), [](double v) { return v > 0.0; });

  double max_omega = 0.0;
  for (int j = 0; j < p.nodes; ++j) max_omega = std::max(max_omega, std::abs(p.omega_at(j)));
  fl.strong_detuning = p.delta >= 10.0 * p.g;
  fl.weak_drive = p.delta > 0.0 && p.g * p.g / p.delta >= 10.0 * max_omega;
  fl.low_cavity_loss = 10.0 * p.kappa <= p.j_c;
  fl.low_emission = p.delta != 0.0 && 10.0 * p.gamma <= p.j_c * p.g * p.g / (p.delta * p.delta);
  fl.dispersive_modes = std::all_of(em.delta_k.begin(), em.delta_k.end(), [&](double v) { return v >= 10.0 * p.g; });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!fl.modes_positive) {
    em.j0 = em.gamma_e = em.gamma_c = em.t_f = em.f_unclamped = em.f_est = nan;
    em.theta_r = cplx{nan, nan};
    return em;
  }

  const auto c = dipole_couplings(p);
  em.j0 = c.j0;
  em.jl = c.jl;
  em.e_k = energies_from(p, em.k, c);
  em.e_k_literal = collective_energies_literal(p);
  const auto r = collective_rabi(p);
  em.omega1k = r.omega1k;
  em.omega2k = r.omega2k;

  double max_rabi = 0.0, min_e = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < em.e_k.size(); ++m) {
    max_rabi = std::max({max_rabi, std::abs(r.omega1k[m]), std::abs(r.omega2k[m])});
    min_e = std::min(min_e, std::abs(em.e_k[m]));
  }
  fl.raman_regime = min_e >= 10.0 * max_rabi;

  const bool energies_ok = std::none_of(em.e_k.begin(), em.e_k.end(), [](double v) { return v == 0.0; });
  if (!energies_ok) {
    em.gamma_e = em.gamma_c = em.t_f = em.f_unclamped = em.f_est = nan;
    em.theta_r = cplx{nan, nan};
    return em;
  }
  em.theta_r = raman_sum(r, em.e_k);
  const auto rates = decay_from(p, r, em.e_k, em.delta_k, rule);
  em.gamma_e = rates.gamma_e;
  em.gamma_c = rates.gamma_c;
  if (std::abs(em.theta_r) > 0.0) {
    em.t_f = std::numbers::pi / (2.0 * std::abs(em.theta_r));
    em.f_unclamped = 1.0 - (em.gamma_e + em.gamma_c) * em.t_f;
  } else {
    em.t_f = std::numeric_limits<double>::infinity();
    em.f_unclamped = (em.gamma_e + em.gamma_c) > 0.0 ? -std::numeric_limits<double>::infinity() : 1.0;
  }
  em.f_est = std::clamp(em.f_unclamped, 0.0, 1.0);
  fl.estimate_in_range = em.f_unclamped >= 0.0 && em.f_unclamped <= 1.0;
  return em;
}

}  // namespace qtransfer
