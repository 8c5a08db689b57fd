#include <gtest/gtest.h>

#include <random>

#include "qtransfer/operator_core.hpp"

using namespace qtransfer;

namespace {

MatrixXc random_matrix(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  MatrixXc m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = {d(rng), d(rng)};
  return m;
}

// Plain index-loop Kronecker product.
MatrixXc naive_kron(const MatrixXc& a, const MatrixXc& b) {
  MatrixXc k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index p = 0; p < b.rows(); ++p)
        for (Index q = 0; q < b.cols(); ++q) k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return k;
}

// Trace out the second factor of a (da x db) bipartite matrix.
MatrixXc naive_trace_second(const MatrixXc& rho, Index da, Index db) {
  MatrixXc r = MatrixXc::Zero(da, da);
  for (Index i = 0; i < da; ++i)
    for (Index j = 0; j < da; ++j)
      for (Index k = 0; k < db; ++k) r(i, j) += rho(i * db + k, j * db + k);
  return r;
}

}  // namespace

TEST(SpaceDescriptor, ChainLayoutAndDimension) {
  const auto s = SpaceDescriptor::chain(3, 1);
  EXPECT_EQ(s.size(), 6u);
  EXPECT_EQ(s.dimension(), 216);
  EXPECT_EQ(s[SpaceDescriptor::atom_factor(1)].kind, FactorKind::atom);
  EXPECT_EQ(s[SpaceDescriptor::cavity_factor(2)].dim, 2);
  EXPECT_EQ(SpaceDescriptor::chain(2, 2).dimension(), 81);
}

TEST(SpaceDescriptor, IndexDigitsRoundTrip) {
  const auto s = SpaceDescriptor::qudits({3, 2, 4});
  for (Index i = 0; i < s.dimension(); ++i) EXPECT_EQ(s.index_of(s.digits_of(i)), i);
  const std::vector<int> d{2, 1, 3};
  EXPECT_EQ(s.index_of(d), 2 * 8 + 1 * 4 + 3);
  EXPECT_EQ(s.stride(0), 8);
}

TEST(SpaceDescriptor, RejectsBadFactors) {
  EXPECT_THROW(SpaceDescriptor({Factor{FactorKind::atom, 2}}), DimensionError);
  EXPECT_THROW(SpaceDescriptor::qudits({1}), DimensionError);
  EXPECT_THROW(SpaceDescriptor::chain(2, 0), DimensionError);
  const std::vector<int> bad{0, 5, 0};
  EXPECT_THROW(SpaceDescriptor::qudits({3, 2, 4}).index_of(bad), DimensionError);
}

TEST(Operators, AnnihilationMatrixElements) {
  const auto a = annihilation(3);
  for (int n = 1; n <= 3; ++n) EXPECT_DOUBLE_EQ(a.coeff(n - 1, n).real(), std::sqrt(double(n)));
  // [a, a^dagger] = 1 except on the truncated top level.
  const MatrixXc c = commutator(a, a.adjoint()).to_dense();
  for (int n = 0; n < 3; ++n) EXPECT_NEAR(std::abs(c(n, n) - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(c(3, 3).real(), -3.0, 1e-14);
}

TEST(Operators, TensorMatchesNaiveKronecker) {
  std::mt19937_64 rng(3);
  const MatrixXc a = random_matrix(3, rng), b = random_matrix(4, rng);
  const Operator oa(SpaceDescriptor::qudits({3}), a), ob(SpaceDescriptor::qudits({4}), b);
  const MatrixXc k = tensor(oa, ob).to_dense();
  EXPECT_LT((k - naive_kron(a, b)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(tensor(oa, ob).space(), SpaceDescriptor::qudits({3, 4}));
}

TEST(Operators, MixedProductProperty) {
  std::mt19937_64 rng(4);
  const auto s2 = SpaceDescriptor::qudits({2}), s3 = SpaceDescriptor::qudits({3});
  const Operator a(s2, random_matrix(2, rng)), b(s3, random_matrix(3, rng));
  const Operator c(s2, random_matrix(2, rng)), d(s3, random_matrix(3, rng));
  const MatrixXc lhs = (tensor(a, b) * tensor(c, d)).to_dense();
  const MatrixXc rhs = tensor(Operator(a * c), Operator(b * d)).to_dense();
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Operators, EmbedEqualsIdentityKronecker) {
  std::mt19937_64 rng(5);
  const auto space = SpaceDescriptor::qudits({2, 3, 2});
  const MatrixXc local = random_matrix(3, rng);
  const Operator e = embed(Operator(SpaceDescriptor::qudits({3}), local), 1, space);
  const MatrixXc ref = naive_kron(naive_kron(MatrixXc::Identity(2, 2), local), MatrixXc::Identity(2, 2));
  EXPECT_LT((e.to_dense() - ref).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(embed(Operator(SpaceDescriptor::qudits({3}), local), 0, space), DimensionError);
  EXPECT_THROW(embed(Operator(SpaceDescriptor::qudits({3}), local), 3, space), DimensionError);
}

TEST(Operators, SparseAndDenseAgree) {
  // 4 nodes at n_max = 1 is above the dense limit.
  const auto big = SpaceDescriptor::chain(4, 1);
  ASSERT_TRUE(Operator::uses_sparse(big.dimension()));
  const Operator n = embed(Operator(annihilation(1).adjoint() * annihilation(1)), SpaceDescriptor::cavity_factor(3), big);
  EXPECT_TRUE(n.is_sparse());
  const Operator small = embed(Operator(annihilation(1).adjoint() * annihilation(1)), 1, SpaceDescriptor::qudits({3, 2}));
  EXPECT_FALSE(small.is_sparse());
  EXPECT_NEAR(n.trace().real(), big.dimension() / 2.0, 1e-12);
  EXPECT_NEAR(small.trace().real(), 3.0, 1e-12);
  EXPECT_NEAR(hermiticity_error(n), 0.0, 1e-15);
}

TEST(Operators, ShapeMismatchRejected) {
  const Operator a = Operator::identity(SpaceDescriptor::qudits({2}));
  const Operator b = Operator::identity(SpaceDescriptor::qudits({3}));
  EXPECT_THROW(a + b, DimensionError);
  EXPECT_THROW(a * b, DimensionError);
}

TEST(States, PureRejectsUnnormalized) {
  VectorXc v(2);
  v << 1.0, 1.0;
  EXPECT_THROW(State::pure(SpaceDescriptor::qudits({2}), v), DomainError);
  EXPECT_NO_THROW(State::pure(SpaceDescriptor::qudits({2}), v / std::sqrt(2.0)));
}

TEST(States, DensityValidation) {
  const auto s = SpaceDescriptor::qudits({2});
  MatrixXc rho(2, 2);
  rho << 0.5, 0.0, 0.0, 0.5;
  EXPECT_NO_THROW(State::density(s, rho));
  MatrixXc neg(2, 2);
  neg << 1.1, 0.0, 0.0, -0.1;
  EXPECT_THROW(State::density(s, neg), DomainError);
  MatrixXc nonherm(2, 2);
  nonherm << 0.5, 0.3, 0.0, 0.5;
  EXPECT_THROW(State::density(s, nonherm), DomainError);
  MatrixXc trace2 = 2.0 * rho;
  EXPECT_THROW(State::density(s, trace2), DomainError);
}

TEST(States, PartialTraceProductAndBell) {
  const auto s = SpaceDescriptor::qudits({2, 3});
  VectorXc a(2), b(3);
  a << 0.6, cplx{0.0, 0.8};
  b << 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), cplx{0.0, 1.0 / std::sqrt(3.0)};
  VectorXc ab(6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) ab(3 * i + j) = a(i) * b(j);
  const State psi = State::pure(s, ab);
  const MatrixXc ra = partial_trace(psi, {0}).matrix();
  EXPECT_LT((ra - a * a.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  const MatrixXc rb = partial_trace(psi, {1}).matrix();
  EXPECT_LT((rb - b * b.adjoint()).cwiseAbs().maxCoeff(), 1e-14);

  VectorXc bell = VectorXc::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const State pb = State::pure(SpaceDescriptor::qudits({2, 2}), bell);
  EXPECT_LT((partial_trace(pb, {1}).matrix() - 0.5 * MatrixXc::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(States, PartialTraceMatchesNaiveOnRandomDensity) {
  std::mt19937_64 rng(9);
  const MatrixXc g = random_matrix(6, rng);
  MatrixXc rho = g * g.adjoint();
  rho /= rho.trace();
  const State st = State::density(SpaceDescriptor::qudits({2, 3}), rho);
  EXPECT_LT((partial_trace(st, {0}).matrix() - naive_trace_second(rho, 2, 3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(States, ExpectationPureAndMixedAgree) {
  std::mt19937_64 rng(11);
  const auto s = SpaceDescriptor::qudits({3});
  MatrixXc h = random_matrix(3, rng);
  h = (h + h.adjoint()).eval();
  VectorXc v(3);
  v << 0.6, 0.0, cplx{0.0, 0.8};
  const State p = State::pure(s, v);
  const Operator op(s, h);
  EXPECT_NEAR(std::abs(expectation(op, p) - expectation(op, p.to_density())), 0.0, 1e-14);
  EXPECT_NEAR(expectation(op, p).imag(), 0.0, 1e-14);
}

TEST(Operators, LongDoubleInstantiation) {
  const auto a = annihilation<long double>(2);
  const auto n = a.adjoint() * a;
  EXPECT_NEAR(static_cast<double>(n.coeff(2, 2).real()), 2.0, 1e-18);
}
