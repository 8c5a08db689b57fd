// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers.
// Exit status is 0 when the failing set equals --expect-fail (empty by default).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "qtransfer/dynamics.hpp"
#include "qtransfer/effective_model.hpp"
#include "qtransfer/experiments.hpp"
#include "qtransfer/stirap.hpp"
#include "qtransfer/waveguide_model.hpp"

using namespace qtransfer;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct TransferChecks {
  CompareSummary s;
  double nmax_diff = 0.0;
  double secs = 0.0;

  bool ok() const {
    return s.final_first <= 0.03 && s.final_last >= 0.45 && s.max_dev_first <= 0.1 && s.max_dev_last <= 0.1 &&
           s.peak_leakage <= 0.05 && nmax_diff <= 1e-6 && secs < 120.0;
  }
  std::string describe() const {
    return fmt("P_1_1(t_f)=%.4f [<=0.03] P_1_3(t_f)=%.4f [>=0.45] max dev %.4f / %.4f [<=0.1] "
               "peak leakage %.4f [<=0.05] n_max=2 diff %.1e t_f=%.1f/g %.2f s",
               s.final_first, s.final_last, s.max_dev_first, s.max_dev_last, s.peak_leakage, nmax_diff, s.t_f, secs);
  }
};

// Lindblad run against the effective curves on [0, t_f], then the same run with room for two photons per cavity.
TransferChecks check_transfer(const char* preset) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = parse_config(std::string(R"({"experiment": "compare", "preset": ")") + preset +
                                R"(", "transfer": {"backend": "lindblad"}, "grid": {"n_steps": 4000}})");
  TransferChecks c;
  const auto out = run_compare(cfg);
  c.s = out.summary;
  auto cfg2 = cfg;
  cfg2.chain.n_max = 2;
  cfg2.backend = Backend::schrodinger;
  const auto out2 = run_compare(cfg2);
  for (const char* name : {"P_1_1", "P_1_3", "leakage"})
    c.nmax_diff = std::max(c.nmax_diff, max_abs_diff(out.exact.series(name), out2.exact.series(name)));
  c.secs = seconds_since(t0);
  return c;
}

Outcome transfer_vs_effective() {
  const auto c = check_transfer("raman-demo");
  return {c.ok(), c.describe()};
}

Outcome period_scaling() {
  const auto strong = parse_config(R"({"experiment": "compare", "preset": "raman-demo"})").chain;
  const auto weak = parse_config(R"({"experiment": "compare", "preset": "raman-demo-weak"})").chain;
  const double ratio = compute_effective_model(weak).t_f / compute_effective_model(strong).t_f;
  const double spectral = exact_transfer_time(weak) / exact_transfer_time(strong);
  const auto c = check_transfer("raman-demo-weak");
  const bool ok = std::abs(ratio / 4.0 - 1.0) <= 0.01 && c.ok();
  return {ok, fmt("t_f ratio %.6f [4 +- 1%%]; repeat at half drive: %s; full-model splitting ratio %.4f (info)", ratio,
                  c.describe().c_str(), spectral)};
}

Outcome effective_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  double eig_err = 0.0, ek_rel = 0.0, theta_rel = 0.0;
  int cases = 0;
  for (int n = 2; n <= 12; ++n)
    for (double delta : {5.0, 10.0, 20.0})
      for (double jc : {0.1, 0.5}) {
        const auto p = ChainParams::end_driven(n, delta, jc, cplx{0.02}, cplx{0.03});
        auto e = collective_energies(p);
        auto v = vd_eigs_oracle(p);
        std::sort(e.begin(), e.end());
        std::sort(v.begin(), v.end());
        for (std::size_t i = 0; i < e.size(); ++i) eig_err = std::max(eig_err, std::abs(e[i] - v[i]));
        const auto ek = collective_energies(p);
        const auto dk = mode_detunings(p);
        for (std::size_t i = 0; i < ek.size(); ++i)
          ek_rel = std::max(ek_rel, std::abs(ek[i] - p.g * p.g / dk[i]) / std::abs(p.g * p.g / dk[i]));
        if (n >= 3) {
          const cplx closed = 0.02 * 0.03 * jc / (p.g * p.g);
          theta_rel = std::max(theta_rel, std::abs(raman_rate(p) - closed) / std::abs(closed));
        }
        ++cases;
      }
  const bool ok = eig_err <= 1e-9 && ek_rel <= 1e-9 && theta_rel <= 1e-6;
  return {ok, fmt("%d parameter sets: eigenvalue err %.1e [<=1e-9] E_k rel err %.1e [<=1e-9] "
                  "Theta_r rel err %.1e [<=1e-6] %.2f s",
                  cases, eig_err, ek_rel, theta_rel, seconds_since(t0))};
}

Outcome trajectories_vs_master() {
  const auto t0 = std::chrono::steady_clock::now();
  auto p = ChainParams::end_driven(2, 10.0, 0.5, cplx{0.02}, cplx{0.02});
  p.gamma = p.kappa = 0.02;
  const Operator h = build_hamiltonian(p);
  const auto jumps = build_lindblad(p);
  const State psi0 = initial_transfer_state(p, cplx{1.0 / std::sqrt(2.0)}, cplx{1.0 / std::sqrt(2.0)});
  const TimeGrid grid{0.0, compute_effective_model(p).t_f, 100, 1};
  const auto obs = standard_observables(p);
  const std::uint64_t seed = 20240601;
  const auto me = evolve_lindblad(h, jumps, psi0.to_density(), grid, obs);
  const auto a = evolve_mcwf(h, jumps, psi0, grid, 1000, seed, obs);
  const auto b = evolve_mcwf(h, jumps, psi0, grid, 1000, seed, obs);
  const bool identical = a.values == b.values && a.errors == b.errors;

  double worst_fraction = 1.0;
  std::string worst;
  for (const auto& o : obs) {
    const auto& m = me.series(o.name);
    const auto& x = a.series(o.name);
    const auto& se = *a.standard_error(o.name);
    int inside = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (std::abs(x[i] - m[i]) <= 3.0 * se[i] + 1e-9) ++inside;
    const double frac = static_cast<double>(inside) / static_cast<double>(m.size());
    if (frac < worst_fraction || worst.empty()) {
      worst_fraction = frac;
      worst = o.name;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_fraction >= 0.95 && identical && secs < 60.0;
  return {ok, fmt("worst observable %s within 3 stderr at %.1f%% of times [>=95%%] same-seed rerun %s %.2f s",
                  worst.c_str(), 100.0 * worst_fraction, identical ? "bit-identical" : "DIFFERS", secs)};
}

Outcome hardware_scan() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = parse_config(R"({"experiment": "fidelity-scan", "preset": "stripline-hardware",
    "scan": {"nodes_from": 2, "nodes_to": 100}})");
  const auto rep = run_fidelity_scan(cfg);
  const double secs = seconds_since(t0);
  const bool reported = rep.claims.has_value() && rep.rows.size() == 99;
  std::string claims = "no claim comparison";
  if (rep.claims)
    claims = fmt("N=%d computed F=%.4f t_f=%.3g us beside claimed F=%.2f t_f=%.2g us", rep.claims->nodes,
                 rep.claims->computed_f, rep.claims->computed_t_f_us, rep.claims->claimed_f,
                 rep.claims->claimed_t_f_us);
  const bool ok = rep.nonincreasing && reported && secs < 10.0;
  return {ok, fmt("nonincreasing %s (largest rise %.2e at N=%d) %s; %.3f s [<10 s]", rep.nonincreasing ? "yes" : "no",
                  rep.max_increase, rep.max_increase_at, claims.c_str(), secs)};
}

Outcome adiabatic_plateau() {
  ChainParams p = ChainParams::end_driven(3, 10.0, 0.5, 0.0, 0.0);
  p.omega.clear();
  auto final_pop = [&](const PulseSchedule& s) {
    return run_stirap(p, s, {0.0, s.total_time, 200, 1}, StirapBackend::effective).series("P_1_N").back();
  };
  std::vector<double> fwd, rev;
  for (double w : {8000.0, 16000.0, 32000.0, 64000.0, 128000.0}) {
    const auto s = PulseSchedule::sin2_sequence(0.004, 0.004, w, 0.5);
    fwd.push_back(final_pop(s));
    rev.push_back(final_pop(s.reversed()));
  }
  bool monotone = true, reversal_lower = true;
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    if (i > 0 && fwd[i] < fwd[i - 1] - 1e-3) monotone = false;
    if (!(rev[i] < fwd[i])) reversal_lower = false;
  }
  std::string seq;
  for (double f : fwd) seq += fmt("%s%.4f", seq.empty() ? "" : " ", f);
  const bool ok = monotone && fwd.back() > 0.95 && reversal_lower;
  return {ok, fmt("transfer over width doublings %s; plateau %.5f [>0.95]; reversed at plateau %.2e", seq.c_str(),
                  fwd.back(), rev.back())};
}

Outcome structural_invariants() {
  double herm = 0.0, excitation = 0.0;
  for (int n = 2; n <= 4; ++n)
    for (int nmax : {1, 2}) {
      if (n == 4 && nmax == 2) continue;
      for (auto b : {Boundary::periodic, Boundary::open}) {
        auto p = ChainParams::end_driven(n, 10.0, 0.5, cplx{0.02, 0.01}, cplx{0.015, -0.02});
        p.n_max = nmax;
        p.boundary = b;
        p.storage_detuning = 0.1;
        const Operator h = build_hamiltonian(p);
        herm = std::max(herm, hermiticity_error(h));
        excitation = std::max(excitation, commutator(h, excitation_number(p)).max_abs());
      }
    }

  // Open N=2 chain with full trace tracking, final-state positivity and a step-halving check.
  auto p = ChainParams::end_driven(2, 10.0, 0.5, cplx{0.02}, cplx{0.02});
  p.gamma = p.kappa = 0.02;
  const Operator h = build_hamiltonian(p);
  auto obs = standard_observables(p);
  obs.push_back({"trace", Operator::identity(p.space())});
  const State psi0 = initial_transfer_state(p, cplx{0.6}, cplx{0.8});
  const TimeGrid grid{0.0, 2000.0, 50, 1};
  IntegratorOptions opt;
  opt.step_halving_check = true;
  for (std::size_t f = 0; f < p.space().size(); ++f) opt.keep_final.push_back(f);
  const auto me = evolve_lindblad(h, build_lindblad(p), psi0.to_density(), grid, obs, opt);
  const auto se = evolve_schrodinger(h, psi0, grid, obs, opt);
  double norm_drift = 0.0;
  for (double x : me.series("trace")) norm_drift = std::max(norm_drift, std::abs(x - 1.0));
  for (double x : se.series("trace")) norm_drift = std::max(norm_drift, std::abs(x - 1.0));
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(me.final_reduced->density_matrix());
  const double min_eig = es.eigenvalues().minCoeff();
  const double halving = std::max(*me.step_halving_diff, *se.step_halving_diff);

  const cplx a{0.6}, b{0.0, 0.8};
  VectorXc v(2);
  v << a, b;
  const double f_pure = transfer_fidelity(State::pure(SpaceDescriptor::qudits({2}), v), a, b, false);
  const double f_mixed =
      transfer_fidelity(State::density(SpaceDescriptor::qudits({2}), 0.5 * MatrixXc::Identity(2, 2)), a, b, true);
  const double f_err = std::max(std::abs(f_pure - 1.0), std::abs(f_mixed - 0.5));

  const bool ok = herm <= 1e-12 && excitation <= 1e-12 && norm_drift <= 1e-7 && min_eig >= -1e-8 &&
                  halving <= 1e-6 && f_err <= 1e-12;
  return {ok, fmt("hermiticity %.1e excitation commutator %.1e [<=1e-12] norm/trace drift %.1e [<=1e-7] "
                  "min eigenvalue %.1e [>=-1e-8] step halving %.1e [<=1e-6] fidelity identities %.1e",
                  herm, excitation, norm_drift, min_eig, halving, f_err)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> expect_fail;
  std::vector<int> only;
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
  app.add_option("--only", only, "run these criteria only")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact vs effective transfer", transfer_vs_effective},
      {"transfer time scaling", period_scaling},
      {"effective-model oracles", effective_oracles},
      {"trajectories vs master equation", trajectories_vs_master},
      {"hardware fidelity scan", hardware_scan},
      {"adiabatic passage plateau", adiabatic_plateau},
      {"structural invariants", structural_invariants},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::printf("criterion %d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }

  std::set<int> expected;
  for (int id : expect_fail)
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) expected.insert(id);
  const bool as_expected = failed == expected;
  std::printf("%zu failing, %s\n", failed.size(), as_expected ? "matches the expected set" : "DOES NOT match the expected set");
  return as_expected ? 0 : 1;
}
