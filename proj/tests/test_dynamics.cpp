#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "qtransfer/dynamics.hpp"
#include "qtransfer/effective_model.hpp"

using namespace qtransfer;

namespace {

const SpaceDescriptor kQubit = SpaceDescriptor::qudits({2});

Operator pauli_x(double omega) {
  MatrixXc m(2, 2);
  m << 0.0, omega, omega, 0.0;
  return Operator(kQubit, m);
}

Operator projector(Index dim, Index i, const SpaceDescriptor& s) {
  MatrixXc m = MatrixXc::Zero(dim, dim);
  m(i, i) = 1.0;
  return Operator(s, m);
}

LindbladSet qubit_decay(double gamma) {
  MatrixXc l = MatrixXc::Zero(2, 2);
  l(0, 1) = std::sqrt(gamma);
  return {{Operator(kQubit, l)}, {"decay"}};
}

ChainParams demo(int nodes) { return ChainParams::end_driven(nodes, 10.0, 0.5, 0.02, 0.02); }

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(TimeGrid, RecordedPointsKeepTheEnd) {
  const TimeGrid g{0.0, 1.0, 10, 3};
  EXPECT_EQ(g.recorded_points(), (std::vector<int>{0, 3, 6, 9, 10}));
  EXPECT_THROW((TimeGrid{1.0, 1.0, 10, 1}.validate()), DomainError);
  EXPECT_THROW((TimeGrid{0.0, 1.0, 0, 1}.validate()), DomainError);
}

TEST(Schrodinger, ZeroHamiltonianIsStatic) {
  VectorXc v(2);
  v << 0.6, cplx{0.0, 0.8};
  const auto r = evolve_schrodinger(Operator::zero(kQubit), State::pure(kQubit, v), {0.0, 5.0, 50, 1},
                                    {{"p1", projector(2, 1, kQubit)}});
  for (double x : r.series("p1")) EXPECT_NEAR(x, 0.64, 1e-15);
  EXPECT_EQ(r.n_traj, 1);
}

TEST(Schrodinger, RabiOscillation) {
  const double om = 0.7;
  const TimeGrid g{0.0, 20.0, 200, 1};
  const auto r = evolve_schrodinger(pauli_x(om), State::basis(kQubit, 0), g, {{"p1", projector(2, 1, kQubit)}});
  double err = 0;
  for (std::size_t i = 0; i < r.times.size(); ++i)
    err = std::max(err, std::abs(r.series("p1")[i] - std::pow(std::sin(om * r.times[i]), 2)));
  EXPECT_LE(err, 1e-8);
}

TEST(Schrodinger, RejectsNonHermitianAndMismatch) {
  MatrixXc m(2, 2);
  m << 0.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(evolve_schrodinger(Operator(kQubit, m), State::basis(kQubit, 0), {0, 1, 10, 1}, {}), DomainError);
  const auto other = SpaceDescriptor::qudits({3});
  EXPECT_THROW(evolve_schrodinger(pauli_x(1.0), State::basis(other, 0), {0, 1, 10, 1}, {}), DimensionError);
}

TEST(Schrodinger, EnergyConservedOverTransfer) {
  const auto p = demo(3);
  const Operator h = build_hamiltonian(p);
  const double tf = compute_effective_model(p).t_f;
  const auto r = evolve_schrodinger(h, initial_transfer_state(p, M_SQRT1_2, M_SQRT1_2), {0.0, tf, 100, 1},
                                    {{"energy", h}, {"norm", Operator::identity(p.space())}});
  const auto& e = r.series("energy");
  double drift = 0;
  for (double x : e) drift = std::max(drift, std::abs(x - e.front()));
  EXPECT_LE(drift, 1e-8);
  for (double x : r.series("norm")) EXPECT_NEAR(x, 1.0, 1e-7);
}

TEST(Schrodinger, StepHalvingConverges) {
  const auto p = demo(3);
  IntegratorOptions opt;
  opt.step_halving_check = true;
  const auto r = evolve_schrodinger(build_hamiltonian(p), initial_transfer_state(p, M_SQRT1_2, M_SQRT1_2),
                                    {0.0, 2000.0, 40, 1}, standard_observables(p), opt);
  ASSERT_TRUE(r.step_halving_diff.has_value());
  EXPECT_LE(*r.step_halving_diff, 1e-6);
}

TEST(Schrodinger, ReachableSubspaceIsExact) {
  const auto p = demo(3);
  const Operator h = build_hamiltonian(p);
  const State psi = initial_transfer_state(p, M_SQRT1_2, M_SQRT1_2);
  const auto basis = reachable_basis({&h}, {ground_index(p), flipped_index(p, 0, kStorage)});
  // |0>, |1_1>, |1_3>, three |e_j>, three single photons, and nothing else.
  EXPECT_EQ(basis.size(), 9u);
  IntegratorOptions full;
  full.reduce_to_reachable = false;
  const TimeGrid g{0.0, 300.0, 30, 1};
  const auto a = evolve_schrodinger(h, psi, g, standard_observables(p));
  const auto b = evolve_schrodinger(h, psi, g, standard_observables(p), full);
  for (const auto& n : a.names) EXPECT_LE(max_diff(a.series(n), b.series(n)), 1e-9) << n;
}

TEST(Lindblad, EmptyJumpsMatchSchrodinger) {
  auto p = demo(2);
  const Operator h = build_hamiltonian(p);
  const State psi = initial_transfer_state(p, M_SQRT1_2, M_SQRT1_2);
  const TimeGrid g{0.0, 3000.0, 60, 1};
  const auto a = evolve_schrodinger(h, psi, g, standard_observables(p));
  const auto b = evolve_lindblad(h, {}, psi, g, standard_observables(p));
  for (const auto& n : a.names) EXPECT_LE(max_diff(a.series(n), b.series(n)), 1e-7) << n;
}

TEST(Lindblad, ExponentialDecay) {
  const double gamma = 0.3;
  const TimeGrid g{0.0, 10.0, 100, 1};
  const auto r = evolve_lindblad(Operator::zero(kQubit), qubit_decay(gamma), State::basis(kQubit, 1), g,
                                 {{"pe", projector(2, 1, kQubit)}, {"tr", Operator::identity(kQubit)}});
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    EXPECT_NEAR(r.series("pe")[i], std::exp(-gamma * r.times[i]), 1e-7);
    EXPECT_NEAR(r.series("tr")[i], 1.0, 1e-7);
  }
}

TEST(Lindblad, TraceAndPositivityWithLosses) {
  auto p = demo(2);
  p.gamma = 0.02;
  p.kappa = 0.02;
  IntegratorOptions opt;
  opt.keep_final = {SpaceDescriptor::atom_factor(1)};
  const auto r = evolve_lindblad(build_hamiltonian(p), build_lindblad(p), initial_transfer_state(p, 0.6, 0.8),
                                 {0.0, 500.0, 50, 1},
                                 {{"tr", Operator::identity(p.space())}, {"ex", excitation_number(p)}}, opt);
  for (double x : r.series("tr")) EXPECT_NEAR(x, 1.0, 1e-7);
  // Excitations only leak out.
  const auto& ex = r.series("ex");
  for (std::size_t i = 1; i < ex.size(); ++i) EXPECT_LE(ex[i], ex[i - 1] + 1e-12);
  ASSERT_TRUE(r.final_reduced.has_value());
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(r.final_reduced->matrix());
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
}

TEST(Lindblad, DimensionBudget) {
  auto p = demo(4);
  p.kappa = 0.01;
  p.gamma = 0.01;
  p.omega.assign(4, cplx{0.02});
  // All four atoms start excited-capable; the reachable space is too large for the superoperator.
  VectorXc v = VectorXc::Zero(p.space().dimension());
  std::vector<int> lv{kStorage, kStorage, kStorage, kStorage}, ph{1, 1, 1, 1};
  v(basis_index(p, lv, ph)) = 1.0;
  EXPECT_THROW(evolve_lindblad(build_hamiltonian(p), build_lindblad(p), State::pure(p.space(), v), {0, 1, 1, 1}, {}),
               DimensionError);
}

TEST(Mcwf, NoJumpsEqualsSchrodinger) {
  const auto p = demo(2);
  const Operator h = build_hamiltonian(p);
  const State psi = initial_transfer_state(p, M_SQRT1_2, M_SQRT1_2);
  const TimeGrid g{0.0, 1000.0, 20, 1};
  const auto a = evolve_schrodinger(h, psi, g, standard_observables(p));
  const auto b = evolve_mcwf(h, {}, psi, g, 8, 42, standard_observables(p));
  EXPECT_EQ(b.n_traj, 8);
  for (const auto& n : a.names) {
    EXPECT_LE(max_diff(a.series(n), b.series(n)), 1e-9) << n;
    for (double e : *b.standard_error(n)) EXPECT_LE(e, 1e-12);
  }
}

TEST(Mcwf, DecayMatchesLindbladOracle) {
  const double gamma = 0.5;
  const TimeGrid g{0.0, 6.0, 20, 1};
  const std::vector<Observable> obs{{"pe", projector(2, 1, kQubit)}};
  const auto ref = evolve_lindblad(Operator::zero(kQubit), qubit_decay(gamma), State::basis(kQubit, 1), g, obs);
  const auto mc = evolve_mcwf(Operator::zero(kQubit), qubit_decay(gamma), State::basis(kQubit, 1), g, 2000, 20240601, obs);
  const auto& se = *mc.standard_error("pe");
  for (std::size_t i = 0; i < mc.times.size(); ++i)
    EXPECT_LE(std::abs(mc.series("pe")[i] - ref.series("pe")[i]), 3.0 * se[i] + 1e-9) << "t=" << mc.times[i];
}

TEST(Mcwf, SeedReproducibleAndThreadIndependent) {
  auto p = demo(2);
  p.gamma = p.kappa = 0.02;
  const Operator h = build_hamiltonian(p);
  const auto l = build_lindblad(p);
  const State psi = initial_transfer_state(p, M_SQRT1_2, M_SQRT1_2);
  const TimeGrid g{0.0, 400.0, 20, 1};
  IntegratorOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const auto a = evolve_mcwf(h, l, psi, g, 64, 7, standard_observables(p), one);
  const auto b = evolve_mcwf(h, l, psi, g, 64, 7, standard_observables(p), many);
  const auto c = evolve_mcwf(h, l, psi, g, 64, 8, standard_observables(p), many);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.errors, b.errors);
  EXPECT_NE(a.values, c.values);
  EXPECT_THROW(evolve_mcwf(h, l, psi, g, 0, 7, {}), DomainError);
}

TEST(Observables, ProjectorsAndResolution) {
  const auto p = demo(3);
  const auto obs = standard_observables(p);
  ASSERT_EQ(obs.size(), 3u + 4u);
  for (int j = 0; j < 3; ++j) {
    const Operator& pj = obs[j].op;
    EXPECT_LE((pj * pj - pj).max_abs(), 1e-15);
    for (int k = 0; k < j; ++k) EXPECT_LE((pj * obs[k].op).max_abs(), 1e-15);
  }
  // On the <= 1 excitation sector: sum_j P_1_j + P_0 + leakage = identity.
  Operator sum = obs[3].op + obs[6].op;
  for (int j = 0; j < 3; ++j) sum += obs[j].op;
  const Operator nexc = excitation_number(p);
  for (Index i = 0; i < p.space().dimension(); ++i) {
    const double n = nexc.coeff(i, i).real();
    if (n <= 1.0 + 1e-12) EXPECT_NEAR(sum.coeff(i, i).real(), 1.0, 1e-15) << i;
  }
  EXPECT_LE((sum - sum.adjoint()).max_abs(), 0.0);

  const State psi = initial_transfer_state(p, M_SQRT1_2, M_SQRT1_2);
  EXPECT_NEAR(expectation(obs[0].op, psi).real(), 0.5, 1e-15);
}

TEST(Driven, ZeroDriveMatchesStatic) {
  DrivenHamiltonian dh;
  dh.static_part = pauli_x(0.4);
  MatrixXc c = MatrixXc::Zero(2, 2);
  c(1, 0) = 1.0;
  dh.drives.push_back({Operator(kQubit, c), [](double) { return cplx{0.0}; }, 0.0});
  const TimeGrid g{0.0, 10.0, 50, 1};
  const std::vector<Observable> obs{{"p1", projector(2, 1, kQubit)}};
  const auto a = evolve_schrodinger_driven(dh, State::basis(kQubit, 0), g, obs);
  const auto b = evolve_schrodinger(pauli_x(0.4), State::basis(kQubit, 0), g, obs);
  EXPECT_LE(max_diff(a.series("p1"), b.series("p1")), 1e-9);
}

TEST(Driven, ConstantEnvelopeIsRabi) {
  DrivenHamiltonian dh;
  dh.static_part = Operator::zero(kQubit);
  MatrixXc c = MatrixXc::Zero(2, 2);
  c(1, 0) = 1.0;
  const double om = 0.3;
  dh.drives.push_back({Operator(kQubit, c), [om](double) { return cplx{om}; }, om});
  const auto r = evolve_schrodinger_driven(dh, State::basis(kQubit, 0), {0.0, 15.0, 60, 1}, {{"p1", projector(2, 1, kQubit)}});
  for (std::size_t i = 0; i < r.times.size(); ++i)
    EXPECT_NEAR(r.series("p1")[i], std::pow(std::sin(om * r.times[i]), 2), 1e-8);
}

TEST(Summation, PairwiseIsAccurate) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(100001);
  long double ref = 0;
  for (auto& x : xs) {
    x = u(rng);
    ref += x;
  }
  EXPECT_NEAR(pairwise_sum(xs), static_cast<double>(ref), 1e-9);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}
