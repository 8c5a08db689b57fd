#pragma once

// Complex linear algebra on tensor-product Hilbert spaces.
//
// Operators and states carry a SpaceDescriptor naming the ordered local
// factors. Storage is dense below kDenseLimit total dimension and sparse
// above; the choice is a pure function of the dimension, so two operators on
// the same space always share a representation.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qtransfer/errors.hpp"

namespace qtransfer {

using Index = Eigen::Index;

template <typename T>
using CMatrix = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using CVector = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, 1>;
template <typename T>
using CSparse = Eigen::SparseMatrix<std::complex<T>>;

using cplx = std::complex<double>;
using MatrixXc = CMatrix<double>;
using VectorXc = CVector<double>;
using SparseXc = CSparse<double>;

enum class FactorKind { atom, cavity, generic };

struct Factor {
  FactorKind kind = FactorKind::generic;
  int dim = 2;

  friend bool operator==(const Factor&, const Factor&) = default;
};

/// Ordered list of local factors; factor 0 is the most significant digit of
/// the global basis index (Kronecker ordering).
class SpaceDescriptor {
 public:
  SpaceDescriptor() = default;

  explicit SpaceDescriptor(std::vector<Factor> factors) : factors_(std::move(factors)) {
    for (const auto& f : factors_) {
      if (f.kind == FactorKind::atom && f.dim != 3)
        throw DimensionError("atomic factor must have dimension 3, got " + std::to_string(f.dim));
      if (f.dim < 2) throw DimensionError("factor dimension must be >= 2, got " + std::to_string(f.dim));
    }
  }

  static SpaceDescriptor qudits(const std::vector<int>& dims) {
    std::vector<Factor> fs;
    fs.reserve(dims.size());
    for (int d : dims) fs.push_back({FactorKind::generic, d});
    return SpaceDescriptor(std::move(fs));
  }

  /// (atom_1, cavity_1, ..., atom_N, cavity_N) with Fock truncation n_max.
  static SpaceDescriptor chain(int nodes, int n_max) {
    if (nodes < 1) throw DimensionError("chain needs at least one node");
    if (n_max < 1) throw DimensionError("n_max must be >= 1");
    std::vector<Factor> fs;
    fs.reserve(2 * static_cast<std::size_t>(nodes));
    for (int j = 0; j < nodes; ++j) {
      fs.push_back({FactorKind::atom, 3});
      fs.push_back({FactorKind::cavity, n_max + 1});
    }
    return SpaceDescriptor(std::move(fs));
  }

  // 0-based node index.
  static constexpr std::size_t atom_factor(int node) { return 2 * static_cast<std::size_t>(node); }
  static constexpr std::size_t cavity_factor(int node) { return 2 * static_cast<std::size_t>(node) + 1; }

  std::size_t size() const noexcept { return factors_.size(); }
  bool empty() const noexcept { return factors_.empty(); }
  const std::vector<Factor>& factors() const noexcept { return factors_; }
  const Factor& operator[](std::size_t i) const { return factors_.at(i); }
  int factor_dim(std::size_t i) const { return factors_.at(i).dim; }

  Index dimension() const {
    Index d = 1;
    for (const auto& f : factors_) d *= f.dim;
    return d;
  }

  /// Product of the dimensions of all factors after `i`.
  Index stride(std::size_t i) const {
    Index s = 1;
    for (std::size_t k = i + 1; k < factors_.size(); ++k) s *= factors_[k].dim;
    return s;
  }

  Index index_of(std::span<const int> digits) const {
    if (digits.size() != factors_.size()) throw DimensionError("digit count does not match factor count");
    Index idx = 0;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      if (digits[k] < 0 || digits[k] >= factors_[k].dim) throw DimensionError("basis digit out of range");
      idx = idx * factors_[k].dim + digits[k];
    }
    return idx;
  }

  std::vector<int> digits_of(Index idx) const {
    std::vector<int> digits(factors_.size());
    for (std::size_t k = factors_.size(); k-- > 0;) {
      digits[k] = static_cast<int>(idx % factors_[k].dim);
      idx /= factors_[k].dim;
    }
    return digits;
  }

  SpaceDescriptor concat(const SpaceDescriptor& other) const {
    auto fs = factors_;
    fs.insert(fs.end(), other.factors_.begin(), other.factors_.end());
    return SpaceDescriptor(std::move(fs));
  }

  SpaceDescriptor select(std::span<const std::size_t> keep) const {
    std::vector<Factor> fs;
    for (auto k : keep) fs.push_back(factors_.at(k));
    return SpaceDescriptor(std::move(fs));
  }

  friend bool operator==(const SpaceDescriptor&, const SpaceDescriptor&) = default;

 private:
  std::vector<Factor> factors_;
};

template <typename T>
class BasicOperator {
 public:
  using Real = T;
  using Scalar = std::complex<T>;
  using Dense = CMatrix<T>;
  using Sparse = CSparse<T>;

  static constexpr Index kDenseLimit = 1024;
  static constexpr bool uses_sparse(Index dim) { return dim >= kDenseLimit; }

  BasicOperator() = default;

  BasicOperator(SpaceDescriptor space, const Dense& m) : space_(std::move(space)) {
    check_shape(m.rows(), m.cols());
    if (uses_sparse(m.rows()))
      data_ = Sparse(m.sparseView());
    else
      data_ = m;
  }

  BasicOperator(SpaceDescriptor space, Sparse m) : space_(std::move(space)) {
    check_shape(m.rows(), m.cols());
    m.makeCompressed();
    if (uses_sparse(m.rows()))
      data_ = std::move(m);
    else
      data_ = Dense(m);
  }

  static BasicOperator identity(const SpaceDescriptor& space) {
    const Index d = space.dimension();
    if (uses_sparse(d)) {
      Sparse id(d, d);
      id.setIdentity();
      return BasicOperator(space, std::move(id));
    }
    return BasicOperator(space, Dense(Dense::Identity(d, d)));
  }

  static BasicOperator zero(const SpaceDescriptor& space) {
    const Index d = space.dimension();
    if (uses_sparse(d)) return BasicOperator(space, Sparse(d, d));
    return BasicOperator(space, Dense(Dense::Zero(d, d)));
  }

  const SpaceDescriptor& space() const noexcept { return space_; }
  Index dimension() const { return is_sparse() ? std::get<Sparse>(data_).rows() : std::get<Dense>(data_).rows(); }
  bool is_sparse() const noexcept { return std::holds_alternative<Sparse>(data_); }

  const Dense& dense() const { return std::get<Dense>(data_); }
  const Sparse& sparse() const { return std::get<Sparse>(data_); }

  Dense to_dense() const { return is_sparse() ? Dense(sparse()) : dense(); }
  Sparse to_sparse() const {
    if (is_sparse()) return sparse();
    Sparse s = dense().sparseView();
    s.makeCompressed();
    return s;
  }

  Scalar coeff(Index i, Index j) const { return is_sparse() ? sparse().coeff(i, j) : dense()(i, j); }

  BasicOperator adjoint() const {
    return visit([&](const auto& m) { return BasicOperator(space_, decltype(eval(m))(m.adjoint())); });
  }

  BasicOperator conjugate() const {
    return visit([&](const auto& m) { return BasicOperator(space_, decltype(eval(m))(m.conjugate())); });
  }

  Scalar trace() const {
    if (!is_sparse()) return dense().trace();
    Scalar t{0};
    const auto& s = sparse();
    for (Index k = 0; k < s.outerSize(); ++k)
      for (typename Sparse::InnerIterator it(s, k); it; ++it)
        if (it.row() == it.col()) t += it.value();
    return t;
  }

  T max_abs() const {
    if (!is_sparse()) return dense().size() == 0 ? T(0) : dense().cwiseAbs().maxCoeff();
    T m = 0;
    const auto& s = sparse();
    for (Index k = 0; k < s.outerSize(); ++k)
      for (typename Sparse::InnerIterator it(s, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
  }

  /// Induced infinity norm (max absolute row sum); bounds the spectral radius.
  T row_sum_norm() const {
    if (!is_sparse()) return dense().size() == 0 ? T(0) : dense().cwiseAbs().rowwise().sum().maxCoeff();
    std::vector<T> rows(static_cast<std::size_t>(dimension()), T(0));
    const auto& s = sparse();
    for (Index k = 0; k < s.outerSize(); ++k)
      for (typename Sparse::InnerIterator it(s, k); it; ++it) rows[static_cast<std::size_t>(it.row())] += std::abs(it.value());
    return rows.empty() ? T(0) : *std::max_element(rows.begin(), rows.end());
  }

  CVector<T> apply(const CVector<T>& v) const {
    if (v.size() != dimension()) throw DimensionError("vector length does not match operator dimension");
    return visit([&](const auto& m) { return CVector<T>(m * v); });
  }

  BasicOperator& operator+=(const BasicOperator& o) {
    check_same(o);
    if (is_sparse())
      std::get<Sparse>(data_) += o.sparse();
    else
      std::get<Dense>(data_) += o.dense();
    return *this;
  }
  BasicOperator& operator-=(const BasicOperator& o) {
    check_same(o);
    if (is_sparse())
      std::get<Sparse>(data_) -= o.sparse();
    else
      std::get<Dense>(data_) -= o.dense();
    return *this;
  }
  BasicOperator& operator*=(Scalar c) {
    if (is_sparse())
      std::get<Sparse>(data_) *= c;
    else
      std::get<Dense>(data_) *= c;
    return *this;
  }

  friend BasicOperator operator+(BasicOperator a, const BasicOperator& b) { return a += b; }
  friend BasicOperator operator-(BasicOperator a, const BasicOperator& b) { return a -= b; }
  friend BasicOperator operator*(Scalar c, BasicOperator a) { return a *= c; }
  friend BasicOperator operator*(BasicOperator a, Scalar c) { return a *= c; }
  friend BasicOperator operator*(const BasicOperator& a, const BasicOperator& b) {
    a.check_same(b);
    if (a.is_sparse()) return BasicOperator(a.space_, Sparse(a.sparse() * b.sparse()));
    return BasicOperator(a.space_, Dense(a.dense() * b.dense()));
  }

 private:
  static Dense eval(const Dense&);
  static Sparse eval(const Sparse&);

  template <typename F>
  auto visit(F&& f) const {
    if (is_sparse()) return f(sparse());
    return f(dense());
  }

  void check_shape(Index rows, Index cols) const {
    if (rows != cols) throw DimensionError("operator matrix must be square");
    if (rows != space_.dimension())
      throw DimensionError("operator matrix dimension " + std::to_string(rows) + " does not match space dimension " +
                           std::to_string(space_.dimension()));
  }

  void check_same(const BasicOperator& o) const {
    if (!(space_ == o.space_)) throw DimensionError("operators act on different spaces");
  }

  SpaceDescriptor space_;
  std::variant<Dense, Sparse> data_;
};

using Operator = BasicOperator<double>;

enum class StateKind { pure, density };

template <typename T>
class BasicState {
 public:
  using Scalar = std::complex<T>;

  BasicState() = default;

  static BasicState pure(SpaceDescriptor space, CVector<T> psi, T tol = T(1e-9)) {
    if (psi.size() != space.dimension()) throw DimensionError("state vector length does not match space");
    const T n = psi.norm();
    if (std::abs(n - T(1)) > tol) throw DomainError("pure state is not normalized (norm = " + std::to_string(double(n)) + ")");
    BasicState s;
    s.space_ = std::move(space);
    s.kind_ = StateKind::pure;
    s.vec_ = std::move(psi);
    return s;
  }

  static BasicState density(SpaceDescriptor space, CMatrix<T> rho, T tol = T(1e-9), T eig_floor = T(-1e-8)) {
    if (rho.rows() != space.dimension() || rho.cols() != space.dimension())
      throw DimensionError("density matrix shape does not match space");
    validate_density(rho, tol, eig_floor);
    BasicState s;
    s.space_ = std::move(space);
    s.kind_ = StateKind::density;
    s.mat_ = std::move(rho);
    return s;
  }

  static BasicState basis(SpaceDescriptor space, Index i) {
    CVector<T> v = CVector<T>::Zero(space.dimension());
    if (i < 0 || i >= v.size()) throw DimensionError("basis index out of range");
    v(i) = Scalar(1);
    return pure(std::move(space), std::move(v));
  }

  /// Throws DomainError unless rho is a trace-one positive semidefinite Hermitian matrix.
  static void validate_density(const CMatrix<T>& rho, T tol = T(1e-9), T eig_floor = T(-1e-8)) {
    if (rho.rows() != rho.cols()) throw DimensionError("density matrix must be square");
    const Scalar tr = rho.trace();
    if (std::abs(tr - Scalar(1)) > tol) throw DomainError("density matrix trace is " + std::to_string(double(tr.real())));
    if (rho.size() > 0 && (rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
      throw DomainError("density matrix is not Hermitian");
    CMatrix<T> herm = (rho + rho.adjoint()) / T(2);
    Eigen::SelfAdjointEigenSolver<CMatrix<T>> es(herm, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().size() > 0 && es.eigenvalues().minCoeff() < eig_floor)
      throw DomainError("density matrix has negative eigenvalue " + std::to_string(double(es.eigenvalues().minCoeff())));
  }

  const SpaceDescriptor& space() const noexcept { return space_; }
  StateKind kind() const noexcept { return kind_; }
  bool is_pure() const noexcept { return kind_ == StateKind::pure; }
  const CVector<T>& vector() const { return vec_; }
  const CMatrix<T>& matrix() const { return mat_; }

  CMatrix<T> density_matrix() const { return is_pure() ? CMatrix<T>(vec_ * vec_.adjoint()) : mat_; }

  BasicState to_density() const {
    if (!is_pure()) return *this;
    BasicState s;
    s.space_ = space_;
    s.kind_ = StateKind::density;
    s.mat_ = density_matrix();
    return s;
  }

 private:
  SpaceDescriptor space_;
  StateKind kind_ = StateKind::pure;
  CVector<T> vec_;
  CMatrix<T> mat_;
};

using State = BasicState<double>;

// ---------------------------------------------------------------------------
// Free functions

/// Single-factor operator |row><col| on a `dim`-level system.
template <typename T = double>
BasicOperator<T> transition(int dim, int row, int col, FactorKind kind = FactorKind::generic) {
  CMatrix<T> m = CMatrix<T>::Zero(dim, dim);
  m(row, col) = std::complex<T>(1);
  return BasicOperator<T>(SpaceDescriptor({Factor{kind, dim}}), m);
}

/// Truncated bosonic annihilation operator on Fock levels 0..n_max.
template <typename T = double>
BasicOperator<T> annihilation(int n_max) {
  CMatrix<T> m = CMatrix<T>::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) m(n - 1, n) = std::sqrt(T(n));
  return BasicOperator<T>(SpaceDescriptor({Factor{FactorKind::cavity, n_max + 1}}), m);
}

template <typename T>
BasicOperator<T> tensor(const BasicOperator<T>& a, const BasicOperator<T>& b) {
  auto space = a.space().concat(b.space());
  if (BasicOperator<T>::uses_sparse(space.dimension())) {
    CSparse<T> k = Eigen::kroneckerProduct(a.to_sparse(), b.to_sparse());
    return BasicOperator<T>(std::move(space), std::move(k));
  }
  CMatrix<T> k = Eigen::kroneckerProduct(a.to_dense(), b.to_dense());
  return BasicOperator<T>(std::move(space), k);
}

/// `local` on factor `site`, identity elsewhere.
template <typename T>
BasicOperator<T> embed(const BasicOperator<T>& local, std::size_t site, const SpaceDescriptor& space) {
  if (site >= space.size()) throw DimensionError("embed: factor index out of range");
  if (local.dimension() != space.factor_dim(site))
    throw DimensionError("embed: local operator dimension " + std::to_string(local.dimension()) +
                         " does not match factor dimension " + std::to_string(space.factor_dim(site)));
  const Index left = space.dimension() / (space.stride(site) * space.factor_dim(site));
  const Index right = space.stride(site);
  CSparse<T> id_left(left, left), id_right(right, right);
  id_left.setIdentity();
  id_right.setIdentity();
  CSparse<T> lm = local.to_sparse();
  CSparse<T> tmp = Eigen::kroneckerProduct(id_left, lm);
  CSparse<T> full = Eigen::kroneckerProduct(tmp, id_right);
  return BasicOperator<T>(space, std::move(full));
}

template <typename T>
BasicOperator<T> commutator(const BasicOperator<T>& a, const BasicOperator<T>& b) {
  return a * b - b * a;
}

/// max |H - H^dagger| over all entries.
template <typename T>
T hermiticity_error(const BasicOperator<T>& h) {
  return (h - h.adjoint()).max_abs();
}

template <typename T>
std::complex<T> expectation(const BasicOperator<T>& op, const BasicState<T>& state) {
  if (!(op.space() == state.space())) throw DimensionError("expectation: operator and state live on different spaces");
  if (state.is_pure()) return state.vector().dot(op.apply(state.vector()));
  const auto& rho = state.matrix();
  if (op.is_sparse()) return CMatrix<T>(op.sparse() * rho).trace();
  return (op.dense() * rho).trace();
}

namespace detail {

inline std::vector<std::size_t> normalize_keep(const SpaceDescriptor& space, std::vector<std::size_t> keep) {
  if (keep.empty()) throw DimensionError("partial_trace: keep set is empty");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.back() >= space.size()) throw DimensionError("partial_trace: factor index out of range");
  return keep;
}

// Splits each global index into (kept index, traced index) in the reduced
// spaces; groups rows sharing a traced index.
struct TraceSplit {
  std::vector<Index> kept;
  std::vector<Index> traced;
};

inline TraceSplit split_indices(const SpaceDescriptor& space, std::span<const Index> support,
                                const std::vector<std::size_t>& keep) {
  std::vector<bool> is_kept(space.size(), false);
  for (auto k : keep) is_kept[k] = true;
  TraceSplit out;
  out.kept.reserve(support.size());
  out.traced.reserve(support.size());
  for (Index g : support) {
    const auto digits = space.digits_of(g);
    Index ki = 0, ti = 0;
    for (std::size_t f = 0; f < space.size(); ++f) {
      if (is_kept[f])
        ki = ki * space.factor_dim(f) + digits[f];
      else
        ti = ti * space.factor_dim(f) + digits[f];
    }
    out.kept.push_back(ki);
    out.traced.push_back(ti);
  }
  return out;
}

template <typename T, typename Accum>
CMatrix<T> reduce_groups(const TraceSplit& split, Index kept_dim, Accum&& value) {
  const std::size_t n = split.kept.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return split.traced[a] < split.traced[b]; });
  CMatrix<T> out = CMatrix<T>::Zero(kept_dim, kept_dim);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi < n && split.traced[order[hi]] == split.traced[order[lo]]) ++hi;
    for (std::size_t a = lo; a < hi; ++a)
      for (std::size_t b = lo; b < hi; ++b)
        out(split.kept[order[a]], split.kept[order[b]]) += value(order[a], order[b]);
    lo = hi;
  }
  return out;
}

}  // namespace detail

/// Reduced density matrix of a state given on a subset `support` of the basis
/// of `space` (amplitudes outside the support are zero).
template <typename T>
CMatrix<T> partial_trace_supported(const SpaceDescriptor& space, std::span<const Index> support, const CVector<T>& psi,
                                   std::vector<std::size_t> keep) {
  keep = detail::normalize_keep(space, std::move(keep));
  const auto split = detail::split_indices(space, support, keep);
  const Index kd = space.select(keep).dimension();
  return detail::reduce_groups<T>(split, kd,
                                  [&](std::size_t a, std::size_t b) { return psi(Index(a)) * std::conj(psi(Index(b))); });
}

template <typename T>
CMatrix<T> partial_trace_supported(const SpaceDescriptor& space, std::span<const Index> support, const CMatrix<T>& rho,
                                   std::vector<std::size_t> keep) {
  keep = detail::normalize_keep(space, std::move(keep));
  const auto split = detail::split_indices(space, support, keep);
  const Index kd = space.select(keep).dimension();
  return detail::reduce_groups<T>(split, kd, [&](std::size_t a, std::size_t b) { return rho(Index(a), Index(b)); });
}

/// Reduced density matrix on the factors listed in `keep` (in their original order).
template <typename T>
BasicState<T> partial_trace(const BasicState<T>& state, std::vector<std::size_t> keep) {
  const auto& space = state.space();
  keep = detail::normalize_keep(space, std::move(keep));
  std::vector<Index> support(static_cast<std::size_t>(space.dimension()));
  std::iota(support.begin(), support.end(), Index{0});
  CMatrix<T> reduced = state.is_pure() ? partial_trace_supported<T>(space, support, state.vector(), keep)
                                       : partial_trace_supported<T>(space, support, state.matrix(), keep);
  return BasicState<T>::density(space.select(keep), std::move(reduced));
}

}  // namespace qtransfer
