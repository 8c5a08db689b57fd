#include "qtransfer/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>
#include <thread>

#include "qtransfer/version.hpp"

namespace qtransfer {

void TimeGrid::validate() const {
  if (!(t1 > t0)) throw DomainError("time grid needs t1 > t0");
  if (n_steps < 1) throw DomainError("time grid needs n_steps >= 1");
  if (stride < 1) throw DomainError("time grid stride must be >= 1");
}

std::vector<int> TimeGrid::recorded_points() const {
  std::vector<int> pts;
  for (int i = 0; i <= n_steps; i += stride) pts.push_back(i);
  if (pts.back() != n_steps) pts.push_back(n_steps);
  return pts;
}

const std::vector<double>& TrajectoryResult::series(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  throw DomainError("no observable named '" + std::string(name) + "'");
}

const std::vector<double>* TrajectoryResult::standard_error(std::string_view name) const {
  if (errors.empty()) return nullptr;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return &errors[i];
  return nullptr;
}

bool TrajectoryResult::has(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

std::vector<Index> reachable_basis(const std::vector<const Operator*>& generators, std::vector<Index> seeds) {
  if (generators.empty()) throw DomainError("reachable_basis needs at least one generator");
  const Index dim = generators.front()->dimension();
  std::vector<SparseXc> mats;
  for (const auto* g : generators) {
    SparseXc s = g->to_sparse();
    s.prune(cplx{0.0});
    mats.push_back(std::move(s));  // column-major: column j lists rows reachable from j
  }
  std::vector<char> seen(static_cast<std::size_t>(dim), 0);
  std::deque<Index> queue;
  for (Index s : seeds) {
    if (s < 0 || s >= dim) throw DimensionError("reachable_basis: seed out of range");
    if (!seen[s]) {
      seen[s] = 1;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const Index j = queue.front();
    queue.pop_front();
    for (const auto& m : mats)
      for (SparseXc::InnerIterator it(m, j); it; ++it)
        if (!seen[it.row()]) {
          seen[it.row()] = 1;
          queue.push_back(it.row());
        }
  }
  std::vector<Index> basis;
  for (Index i = 0; i < dim; ++i)
    if (seen[i]) basis.push_back(i);
  return basis;
}

namespace {

constexpr Index kDenseLocalLimit = 1024;   // restricted operators stored dense below this size
constexpr Index kPropagatorCacheLimit = 256;  // cache step-matrix powers up to this vector length
constexpr Index kSuperopCacheLimit = 400;  // same for vec(rho) under the Liouvillian

// Operator restricted to a basis subset, dense or sparse by size.
class LocalMatrix {
 public:
  LocalMatrix() = default;
  explicit LocalMatrix(SparseXc s) {
    if (s.rows() < kDenseLocalLimit) {
      dense_ = MatrixXc(s);
      is_dense_ = true;
    } else {
      s.makeCompressed();
      sparse_ = std::move(s);
    }
  }

  Index rows() const { return is_dense_ ? dense_.rows() : sparse_.rows(); }
  bool is_dense() const { return is_dense_; }
  const MatrixXc& dense() const { return dense_; }
  const SparseXc& sparse() const { return sparse_; }
  MatrixXc to_dense() const { return is_dense_ ? dense_ : MatrixXc(sparse_); }

  VectorXc apply(const VectorXc& v) const { return is_dense_ ? VectorXc(dense_ * v) : VectorXc(sparse_ * v); }
  MatrixXc apply(const MatrixXc& v) const { return is_dense_ ? MatrixXc(dense_ * v) : MatrixXc(sparse_ * v); }
  // v * this
  MatrixXc apply_right(const MatrixXc& v) const { return is_dense_ ? MatrixXc(v * dense_) : MatrixXc(v * sparse_); }

  LocalMatrix adjoint() const {
    LocalMatrix out;
    out.is_dense_ = is_dense_;
    if (is_dense_)
      out.dense_ = dense_.adjoint();
    else
      out.sparse_ = sparse_.adjoint();
    return out;
  }

  double row_sum_norm() const {
    if (is_dense_) return dense_.size() == 0 ? 0.0 : dense_.cwiseAbs().rowwise().sum().maxCoeff();
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(sparse_.rows());
    for (Index k = 0; k < sparse_.outerSize(); ++k)
      for (SparseXc::InnerIterator it(sparse_, k); it; ++it) rows(it.row()) += std::abs(it.value());
    return rows.size() == 0 ? 0.0 : rows.maxCoeff();
  }

  double expectation(const VectorXc& psi) const { return psi.dot(apply(psi)).real(); }

  // Re tr(this * rho)
  double trace_with(const MatrixXc& rho) const {
    if (is_dense_) return dense_.cwiseProduct(rho.transpose()).sum().real();
    cplx s{0.0};
    for (Index k = 0; k < sparse_.outerSize(); ++k)
      for (SparseXc::InnerIterator it(sparse_, k); it; ++it) s += it.value() * rho(it.col(), it.row());
    return s.real();
  }

 private:
  bool is_dense_ = false;
  MatrixXc dense_;
  SparseXc sparse_;
};

class Reduction {
 public:
  Reduction(std::vector<Index> basis, Index full_dim) : basis_(std::move(basis)), position_(full_dim, -1) {
    for (std::size_t i = 0; i < basis_.size(); ++i) position_[basis_[i]] = static_cast<Index>(i);
  }

  Index size() const { return static_cast<Index>(basis_.size()); }
  const std::vector<Index>& basis() const { return basis_; }

  LocalMatrix restrict(const Operator& op) const {
    std::vector<Eigen::Triplet<cplx>> trips;
    if (op.is_sparse()) {
      const auto& s = op.sparse();
      for (Index k = 0; k < s.outerSize(); ++k)
        for (SparseXc::InnerIterator it(s, k); it; ++it) {
          const Index r = position_[it.row()], c = position_[it.col()];
          if (r >= 0 && c >= 0 && it.value() != cplx{0.0}) trips.emplace_back(r, c, it.value());
        }
    } else {
      const auto& d = op.dense();
      for (Index c = 0; c < size(); ++c)
        for (Index r = 0; r < size(); ++r) {
          const cplx v = d(basis_[r], basis_[c]);
          if (v != cplx{0.0}) trips.emplace_back(r, c, v);
        }
    }
    SparseXc out(size(), size());
    out.setFromTriplets(trips.begin(), trips.end());
    return LocalMatrix(std::move(out));
  }

  VectorXc restrict(const VectorXc& v) const {
    VectorXc out(size());
    for (Index i = 0; i < size(); ++i) out(i) = v(basis_[i]);
    return out;
  }

  MatrixXc restrict(const MatrixXc& m) const {
    MatrixXc out(size(), size());
    for (Index c = 0; c < size(); ++c)
      for (Index r = 0; r < size(); ++r) out(r, c) = m(basis_[r], basis_[c]);
    return out;
  }

 private:
  std::vector<Index> basis_;
  std::vector<Index> position_;
};

std::vector<Index> support_of(const State& s) {
  std::vector<Index> seeds;
  if (s.is_pure()) {
    for (Index i = 0; i < s.vector().size(); ++i)
      if (s.vector()(i) != cplx{0.0}) seeds.push_back(i);
  } else {
    const auto& m = s.matrix();
    for (Index i = 0; i < m.rows(); ++i)
      if (m.row(i).cwiseAbs().maxCoeff() > 0.0) seeds.push_back(i);
  }
  return seeds;
}

Reduction make_reduction(const std::vector<const Operator*>& gens, const State& s, bool reduce) {
  const Index dim = s.space().dimension();
  if (!reduce) {
    std::vector<Index> all(static_cast<std::size_t>(dim));
    for (Index i = 0; i < dim; ++i) all[i] = i;
    return Reduction(std::move(all), dim);
  }
  return Reduction(reachable_basis(gens, support_of(s)), dim);
}

// RK4 step matrix for dy/dt = A y: the fourth-order Taylor polynomial of dt A.
MatrixXc rk4_step_matrix(const MatrixXc& a, double dt) {
  const Index n = a.rows();
  const MatrixXc x = dt * a;
  const MatrixXc id = MatrixXc::Identity(n, n);
  return id + x * (id + x * (id + x * (id + x / 4.0) / 3.0) / 2.0);
}

template <typename Vec, typename F>
void rk4_step(Vec& y, double dt, F&& f) {
  const Vec k1 = f(y);
  const Vec k2 = f(Vec(y + (0.5 * dt) * k1));
  const Vec k3 = f(Vec(y + (0.5 * dt) * k2));
  const Vec k4 = f(Vec(y + dt * k3));
  y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Fixed-step RK4 propagation of dy/dt = A y over grid intervals of `substeps` steps.
class LinearPropagator {
 public:
  LinearPropagator(LocalMatrix a, double dt, long substeps, bool allow_cache)
      : a_(std::move(a)), dt_(dt), substeps_(substeps) {
    if (allow_cache) {
      const MatrixXc step = rk4_step_matrix(a_.to_dense(), dt_);
      powers_.push_back(step);
      while ((2L << (powers_.size() - 1)) <= substeps_) powers_.push_back(powers_.back() * powers_.back());
      interval_ = power(substeps_);
    }
  }

  bool cached() const { return !powers_.empty(); }
  long substeps() const { return substeps_; }
  double dt() const { return dt_; }
  const std::vector<MatrixXc>& powers() const { return powers_; }

  VectorXc advance(const VectorXc& y, long n) const {
    if (cached()) {
      if (n == substeps_) return interval_ * y;
      VectorXc out = y;
      for (std::size_t j = 0; j < powers_.size(); ++j)
        if (n & (1L << j)) out = powers_[j] * out;
      return out;
    }
    VectorXc out = y;
    for (long s = 0; s < n; ++s) step(out);
    return out;
  }

  void step(VectorXc& y) const {
    rk4_step(y, dt_, [&](const VectorXc& v) { return a_.apply(v); });
  }

 private:
  MatrixXc power(long n) const {
    MatrixXc out = MatrixXc::Identity(powers_.front().rows(), powers_.front().cols());
    for (std::size_t j = 0; j < powers_.size(); ++j)
      if (n & (1L << j)) out = powers_[j] * out;
    return out;
  }

  LocalMatrix a_;
  double dt_;
  long substeps_;
  std::vector<MatrixXc> powers_;  // M^(2^j)
  MatrixXc interval_;
};

struct StepChoice {
  long substeps;
  double dt;
};

StepChoice choose_step(const TimeGrid& grid, double scale, const IntegratorOptions& opt, double refine) {
  const double h = grid.spacing();
  double dt_max = opt.dt > 0.0 ? opt.dt : (scale > 0.0 ? opt.dt_scale / scale : h);
  dt_max = std::min(dt_max, h);
  long k = static_cast<long>(std::ceil(h / dt_max - 1e-9));
  k = std::max(1L, k);
  k = static_cast<long>(std::llround(k * refine));
  k = std::max(1L, k);
  return {k, h / static_cast<double>(k)};
}

void check_hermitian(const Operator& h) {
  const double err = hermiticity_error(h);
  if (err > 1e-10 * std::max(1.0, h.max_abs())) throw DomainError("Hamiltonian is not Hermitian");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

TrajectoryResult make_result(const TimeGrid& grid, const std::vector<Observable>& observables) {
  TrajectoryResult r;
  for (int i : grid.recorded_points()) r.times.push_back(i == grid.n_steps ? grid.t1 : grid.t0 + i * grid.spacing());
  for (const auto& o : observables) r.names.push_back(o.name);
  r.values.assign(observables.size(), std::vector<double>(r.times.size(), 0.0));
  return r;
}

std::vector<LocalMatrix> restrict_all(const Reduction& red, const std::vector<Observable>& observables,
                                      const SpaceDescriptor& space) {
  std::vector<LocalMatrix> out;
  for (const auto& o : observables) {
    if (!(o.op.space() == space)) throw DimensionError("observable '" + o.name + "' lives on a different space");
    out.push_back(red.restrict(o.op));
  }
  return out;
}

void fill_metadata(TrajectoryResult& r, const char* backend, const StepChoice& st, bool cached, const Reduction& red,
                   Index full_dim) {
  r.metadata["backend"] = backend;
  r.metadata["integrator"] = "rk4-fixed-step";
  r.metadata["propagation"] = cached ? "cached-step-matrix-powers" : "direct-stepping";
  r.metadata["dt"] = fmt(st.dt);
  r.metadata["substeps_per_interval"] = std::to_string(st.substeps);
  r.metadata["simulated_dimension"] = std::to_string(red.size());
  r.metadata["full_dimension"] = std::to_string(full_dim);
  r.metadata["version"] = kVersion;
}

double max_series_diff(const TrajectoryResult& a, const TrajectoryResult& b) {
  double d = 0.0;
  for (std::size_t o = 0; o < a.values.size(); ++o)
    for (std::size_t t = 0; t < a.values[o].size(); ++t) d = std::max(d, std::abs(a.values[o][t] - b.values[o][t]));
  return d;
}

// ---------------------------------------------------------------------------

TrajectoryResult schrodinger_run(const Operator& h, const State& psi0, const TimeGrid& grid,
                                 const std::vector<Observable>& observables, const IntegratorOptions& opt,
                                 double refine) {
  const Reduction red = make_reduction({&h}, psi0, opt.reduce_to_reachable);
  const LocalMatrix hr = red.restrict(h);
  const auto obs = restrict_all(red, observables, psi0.space());
  const StepChoice st = choose_step(grid, hr.row_sum_norm(), opt, refine);
  SparseXc gen_s = SparseXc(hr.is_dense() ? SparseXc(hr.dense().sparseView()) : hr.sparse()) * cplx{0.0, -1.0};
  LinearPropagator prop(LocalMatrix(std::move(gen_s)), st.dt, st.substeps, red.size() <= kPropagatorCacheLimit);

  TrajectoryResult r = make_result(grid, observables);
  VectorXc psi = red.restrict(psi0.vector());
  const auto pts = grid.recorded_points();
  std::size_t next = 0;
  auto record = [&](int i) {
    if (next < pts.size() && pts[next] == i) {
      for (std::size_t o = 0; o < obs.size(); ++o) r.values[o][next] = obs[o].expectation(psi);
      ++next;
    }
  };
  record(0);
  for (int i = 1; i <= grid.n_steps; ++i) {
    psi = prop.advance(psi, st.substeps);
    const double drift = std::abs(psi.norm() - 1.0);
    if (drift > opt.max_norm_drift)
      throw IntegrationError("Schrodinger norm drift " + fmt(drift) + " exceeds tolerance at t = " +
                             fmt(grid.t0 + i * grid.spacing()));
    record(i);
  }
  fill_metadata(r, "schrodinger", st, prop.cached(), red, psi0.space().dimension());
  if (!opt.keep_final.empty()) {
    CMatrix<double> rho = partial_trace_supported<double>(psi0.space(), red.basis(), psi, opt.keep_final);
    auto keep = opt.keep_final;
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    r.final_reduced = State::density(psi0.space().select(keep), rho / rho.trace(), 1e-6);
  }
  return r;
}

std::vector<std::size_t> sorted_keep(std::vector<std::size_t> keep) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  return keep;
}

TrajectoryResult lindblad_run(const Operator& h, const LindbladSet& jumps, const State& rho0_in, const TimeGrid& grid,
                              const std::vector<Observable>& observables, const IntegratorOptions& opt,
                              double refine) {
  const State rho0 = rho0_in.to_density();
  std::vector<const Operator*> gens{&h};
  for (const auto& l : jumps.operators) gens.push_back(&l);
  const Reduction red = make_reduction(gens, rho0, opt.reduce_to_reachable);
  const Index d = red.size();
  if (d > 512)
    throw DimensionError("master-equation backend limited to 512 simulated states, got " + std::to_string(d) +
                         "; use the MCWF backend");

  const LocalMatrix hr = red.restrict(h);
  std::vector<LocalMatrix> ls;
  for (const auto& l : jumps.operators) ls.push_back(red.restrict(l));
  MatrixXc heff = hr.to_dense();
  double scale = hr.row_sum_norm();
  for (const auto& l : ls) {
    const MatrixXc ld = l.to_dense();
    const MatrixXc ll = ld.adjoint() * ld;
    heff -= cplx{0.0, 0.5} * ll;
    scale += ll.cwiseAbs().rowwise().sum().maxCoeff();
  }
  const MatrixXc gen = cplx{0.0, -1.0} * heff;  // G = -i H_eff
  const StepChoice st = choose_step(grid, scale, opt, refine);
  const auto obs = restrict_all(red, observables, rho0.space());

  TrajectoryResult r = make_result(grid, observables);
  MatrixXc rho = red.restrict(rho0.matrix());
  const auto pts = grid.recorded_points();
  std::size_t next = 0;
  auto record = [&](int i) {
    if (next < pts.size() && pts[next] == i) {
      for (std::size_t o = 0; o < obs.size(); ++o) r.values[o][next] = obs[o].trace_with(rho);
      ++next;
    }
  };
  auto check_trace = [&](int i) {
    const double drift = std::abs(rho.trace().real() - 1.0);
    if (drift > opt.max_norm_drift)
      throw IntegrationError("Lindblad trace drift " + fmt(drift) + " exceeds tolerance at t = " +
                             fmt(grid.t0 + i * grid.spacing()));
  };
  record(0);

  const bool cache = d * d <= kSuperopCacheLimit;
  if (cache) {
    // vec(A rho B) = (B^T kron A) vec(rho), column stacking.
    const MatrixXc id = MatrixXc::Identity(d, d);
    MatrixXc super = Eigen::kroneckerProduct(id, gen).eval();
    super += Eigen::kroneckerProduct(gen.conjugate(), id).eval();
    for (const auto& l : ls) {
      const MatrixXc ld = l.to_dense();
      super += Eigen::kroneckerProduct(ld.conjugate(), ld).eval();
    }
    SparseXc super_s = super.sparseView();
    LinearPropagator prop(LocalMatrix(std::move(super_s)), st.dt, st.substeps, true);
    for (int i = 1; i <= grid.n_steps; ++i) {
      VectorXc v = Eigen::Map<const VectorXc>(rho.data(), d * d);
      v = prop.advance(v, st.substeps);
      rho = Eigen::Map<const MatrixXc>(v.data(), d, d);
      rho = 0.5 * (rho + rho.adjoint()).eval();
      check_trace(i);
      record(i);
    }
  } else {
    const MatrixXc gen_adj = gen.adjoint();
    std::vector<MatrixXc> ld, ld_adj;
    for (const auto& l : ls) {
      ld.push_back(l.to_dense());
      ld_adj.push_back(ld.back().adjoint());
    }
    auto rhs = [&](const MatrixXc& x) {
      MatrixXc out = gen * x + x * gen_adj;
      for (std::size_t k = 0; k < ld.size(); ++k) out += ld[k] * x * ld_adj[k];
      return out;
    };
    for (int i = 1; i <= grid.n_steps; ++i) {
      for (long s = 0; s < st.substeps; ++s) rk4_step(rho, st.dt, rhs);
      rho = 0.5 * (rho + rho.adjoint()).eval();
      check_trace(i);
      record(i);
    }
  }
  fill_metadata(r, "lindblad", st, cache, red, rho0.space().dimension());
  r.metadata["jump_operators"] = std::to_string(jumps.size());
  if (!opt.keep_final.empty()) {
    const auto keep = sorted_keep(opt.keep_final);
    CMatrix<double> reduced = partial_trace_supported<double>(rho0.space(), red.basis(), rho, keep);
    r.final_reduced = State::density(rho0.space().select(keep), reduced / reduced.trace(), 1e-6);
  }
  return r;
}

}  // namespace

TrajectoryResult evolve_schrodinger(const Operator& h, const State& psi0, const TimeGrid& grid,
                                    const std::vector<Observable>& observables, const IntegratorOptions& opt) {
  grid.validate();
  if (!psi0.is_pure()) throw DomainError("evolve_schrodinger needs a pure initial state");
  if (!(h.space() == psi0.space())) throw DimensionError("Hamiltonian and state live on different spaces");
  check_hermitian(h);
  TrajectoryResult r = schrodinger_run(h, psi0, grid, observables, opt, 1.0);
  if (opt.step_halving_check) {
    IntegratorOptions o = opt;
    o.keep_final.clear();
    const TrajectoryResult fine = schrodinger_run(h, psi0, grid, observables, o, 2.0);
    r.step_halving_diff = max_series_diff(r, fine);
    r.metadata["step_halving_max_diff"] = fmt(*r.step_halving_diff);
  }
  return r;
}

TrajectoryResult evolve_lindblad(const Operator& h, const LindbladSet& jumps, const State& rho0, const TimeGrid& grid,
                                 const std::vector<Observable>& observables, const IntegratorOptions& opt) {
  grid.validate();
  if (!(h.space() == rho0.space())) throw DimensionError("Hamiltonian and state live on different spaces");
  for (const auto& l : jumps.operators)
    if (!(l.space() == h.space())) throw DimensionError("jump operator lives on a different space");
  check_hermitian(h);
  TrajectoryResult r = lindblad_run(h, jumps, rho0, grid, observables, opt, 1.0);
  if (opt.step_halving_check) {
    IntegratorOptions o = opt;
    o.keep_final.clear();
    const TrajectoryResult fine = lindblad_run(h, jumps, rho0, grid, observables, o, 2.0);
    r.step_halving_diff = max_series_diff(r, fine);
    r.metadata["step_halving_max_diff"] = fmt(*r.step_halving_diff);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo wave function

namespace {

struct McwfSetup {
  const Reduction* red;
  const LinearPropagator* prop;
  std::vector<LocalMatrix> jumps;
  std::vector<LocalMatrix> obs;
  VectorXc psi0;
  std::vector<int> points;
  int n_steps;
  std::vector<std::size_t> keep;
  const SpaceDescriptor* space;
};

struct TrajectoryOutput {
  std::vector<double> values;  // [obs * n_rec + rec]
  MatrixXc final_reduced;
  long jumps = 0;
};

TrajectoryOutput run_trajectory(const McwfSetup& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const std::size_t n_rec = s.points.size();
  TrajectoryOutput out;
  out.values.assign(s.obs.size() * n_rec, 0.0);

  VectorXc psi = s.psi0;
  double threshold = uni(rng);
  const bool can_jump = !s.jumps.empty();

  auto jump = [&]() {
    std::vector<double> w(s.jumps.size());
    std::vector<VectorXc> cand(s.jumps.size());
    double total = 0.0;
    for (std::size_t i = 0; i < s.jumps.size(); ++i) {
      cand[i] = s.jumps[i].apply(psi);
      w[i] = cand[i].squaredNorm();
      total += w[i];
    }
    if (total <= 0.0) {
      psi.normalize();
    } else {
      double pick = uni(rng) * total;
      std::size_t chosen = s.jumps.size() - 1;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (pick < w[i]) {
          chosen = i;
          break;
        }
        pick -= w[i];
      }
      psi = cand[chosen] / std::sqrt(w[chosen]);
    }
    ++out.jumps;
    threshold = uni(rng);
  };

  std::size_t next = 0;
  auto record = [&](int i) {
    if (next < n_rec && s.points[next] == i) {
      const double n2 = psi.squaredNorm();
      for (std::size_t o = 0; o < s.obs.size(); ++o) out.values[o * n_rec + next] = s.obs[o].expectation(psi) / n2;
      ++next;
    }
  };
  record(0);

  const auto& prop = *s.prop;
  const long k = prop.substeps();
  for (int i = 1; i <= s.n_steps; ++i) {
    if (!can_jump) {
      psi = prop.advance(psi, k);
    } else if (prop.cached()) {
      long remaining = k;
      while (remaining > 0) {
        VectorXc cand = prop.advance(psi, remaining);
        if (cand.squaredNorm() > threshold) {
          psi = std::move(cand);
          break;
        }
        // Largest s < remaining with |P^s psi|^2 > threshold; the jump happens on step s + 1.
        const auto& pw = prop.powers();
        long steps = 0;
        VectorXc phi = psi;
        for (std::size_t j = pw.size(); j-- > 0;) {
          const long len = 1L << j;
          if (steps + len < remaining) {
            VectorXc c = pw[j] * phi;
            if (c.squaredNorm() > threshold) {
              phi = std::move(c);
              steps += len;
            }
          }
        }
        psi = pw[0] * phi;
        steps += 1;
        jump();
        remaining -= steps;
      }
    } else {
      for (long st = 0; st < k; ++st) {
        prop.step(psi);
        if (psi.squaredNorm() <= threshold) jump();
      }
    }
    record(i);
  }
  if (!s.keep.empty()) {
    const VectorXc unit = psi.normalized();
    out.final_reduced = partial_trace_supported<double>(*s.space, s.red->basis(), unit, s.keep);
  }
  return out;
}

}  // namespace

TrajectoryResult evolve_mcwf(const Operator& h, const LindbladSet& jumps, const State& psi0, const TimeGrid& grid,
                             int n_traj, std::uint64_t seed, const std::vector<Observable>& observables,
                             const IntegratorOptions& opt) {
  grid.validate();
  if (n_traj < 1) throw DomainError("MCWF needs n_traj >= 1");
  if (!psi0.is_pure()) throw DomainError("MCWF needs a pure initial state");
  if (!(h.space() == psi0.space())) throw DimensionError("Hamiltonian and state live on different spaces");
  check_hermitian(h);

  std::vector<const Operator*> gens{&h};
  for (const auto& l : jumps.operators) gens.push_back(&l);
  const Reduction red = make_reduction(gens, psi0, opt.reduce_to_reachable);
  const LocalMatrix hr = red.restrict(h);

  McwfSetup setup;
  setup.red = &red;
  MatrixXc heff = hr.to_dense();
  double scale = hr.row_sum_norm();
  for (const auto& l : jumps.operators) {
    setup.jumps.push_back(red.restrict(l));
    const MatrixXc ld = setup.jumps.back().to_dense();
    const MatrixXc ll = ld.adjoint() * ld;
    heff -= cplx{0.0, 0.5} * ll;
    scale += ll.cwiseAbs().rowwise().sum().maxCoeff();
  }
  const StepChoice st = choose_step(grid, scale, opt, 1.0);
  SparseXc gen = (cplx{0.0, -1.0} * heff).sparseView();
  const LinearPropagator prop(LocalMatrix(std::move(gen)), st.dt, st.substeps, red.size() <= kPropagatorCacheLimit);
  setup.prop = &prop;
  setup.obs = restrict_all(red, observables, psi0.space());
  setup.psi0 = red.restrict(psi0.vector());
  setup.points = grid.recorded_points();
  setup.n_steps = grid.n_steps;
  setup.keep = opt.keep_final.empty() ? std::vector<std::size_t>{} : sorted_keep(opt.keep_final);
  setup.space = &psi0.space();

  std::vector<TrajectoryOutput> outs(static_cast<std::size_t>(n_traj));
  unsigned workers = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n_traj));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int t = next++; t < n_traj; t = next++) outs[t] = run_trajectory(setup, seed + static_cast<std::uint64_t>(t));
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  TrajectoryResult r = make_result(grid, observables);
  r.n_traj = n_traj;
  r.errors.assign(observables.size(), std::vector<double>(r.times.size(), 0.0));
  const std::size_t n_rec = r.times.size();
  std::vector<double> column(static_cast<std::size_t>(n_traj));
  for (std::size_t o = 0; o < observables.size(); ++o) {
    for (std::size_t t = 0; t < n_rec; ++t) {
      for (int k = 0; k < n_traj; ++k) column[k] = outs[k].values[o * n_rec + t];
      const double mean = pairwise_sum(column) / n_traj;
      for (int k = 0; k < n_traj; ++k) column[k] = (outs[k].values[o * n_rec + t] - mean) * (outs[k].values[o * n_rec + t] - mean);
      const double var = n_traj > 1 ? pairwise_sum(column) / (n_traj - 1) : 0.0;
      r.values[o][t] = mean;
      r.errors[o][t] = std::sqrt(var / n_traj);
    }
  }
  long total_jumps = 0;
  for (const auto& o : outs) total_jumps += o.jumps;
  fill_metadata(r, "mcwf", st, prop.cached(), red, psi0.space().dimension());
  r.metadata["n_traj"] = std::to_string(n_traj);
  r.metadata["seed"] = std::to_string(seed);
  r.metadata["rng"] = "mt19937_64, substream seed = seed + trajectory index";
  r.metadata["total_jumps"] = std::to_string(total_jumps);
  if (!setup.keep.empty()) {
    MatrixXc avg = MatrixXc::Zero(outs.front().final_reduced.rows(), outs.front().final_reduced.cols());
    for (const auto& o : outs) avg += o.final_reduced;
    avg /= static_cast<double>(n_traj);
    r.final_reduced = State::density(psi0.space().select(setup.keep), avg, 1e-6);
  }
  return r;
}

// ---------------------------------------------------------------------------

TrajectoryResult evolve_schrodinger_driven(const DrivenHamiltonian& h, const State& psi0, const TimeGrid& grid,
                                           const std::vector<Observable>& observables, const IntegratorOptions& opt) {
  grid.validate();
  if (!psi0.is_pure()) throw DomainError("driven evolution needs a pure initial state");
  if (!(h.static_part.space() == psi0.space())) throw DimensionError("Hamiltonian and state live on different spaces");
  check_hermitian(h.static_part);

  std::vector<Operator> adjoints;
  adjoints.reserve(h.drives.size());
  std::vector<const Operator*> gens{&h.static_part};
  for (const auto& d : h.drives) {
    if (!(d.coupling.space() == psi0.space())) throw DimensionError("drive coupling lives on a different space");
    adjoints.push_back(d.coupling.adjoint());
  }
  for (std::size_t i = 0; i < h.drives.size(); ++i) {
    gens.push_back(&h.drives[i].coupling);
    gens.push_back(&adjoints[i]);
  }
  const Reduction red = make_reduction(gens, psi0, opt.reduce_to_reachable);
  const LocalMatrix h0 = red.restrict(h.static_part);
  std::vector<LocalMatrix> cs, cs_adj;
  double scale = h0.row_sum_norm();
  for (const auto& d : h.drives) {
    cs.push_back(red.restrict(d.coupling));
    cs_adj.push_back(cs.back().adjoint());
    scale += 2.0 * d.peak * cs.back().row_sum_norm();
  }
  const auto obs = restrict_all(red, observables, psi0.space());

  auto run = [&](double refine) {
    const StepChoice st = choose_step(grid, scale, opt, refine);
    TrajectoryResult r = make_result(grid, observables);
    VectorXc psi = red.restrict(psi0.vector());
    const auto pts = grid.recorded_points();
    std::size_t next = 0;
    auto record = [&](int i) {
      if (next < pts.size() && pts[next] == i) {
        for (std::size_t o = 0; o < obs.size(); ++o) r.values[o][next] = obs[o].expectation(psi);
        ++next;
      }
    };
    auto rhs_at = [&](double t, const VectorXc& v) {
      VectorXc out = h0.apply(v);
      for (std::size_t k = 0; k < cs.size(); ++k) {
        const cplx f = h.drives[k].envelope(t);
        if (f != cplx{0.0}) out += f * cs[k].apply(v) + std::conj(f) * cs_adj[k].apply(v);
      }
      return VectorXc(cplx{0.0, -1.0} * out);
    };
    record(0);
    for (int i = 1; i <= grid.n_steps; ++i) {
      double t = grid.t0 + (i - 1) * grid.spacing();
      for (long s = 0; s < st.substeps; ++s) {
        const VectorXc k1 = rhs_at(t, psi);
        const VectorXc k2 = rhs_at(t + 0.5 * st.dt, psi + (0.5 * st.dt) * k1);
        const VectorXc k3 = rhs_at(t + 0.5 * st.dt, psi + (0.5 * st.dt) * k2);
        const VectorXc k4 = rhs_at(t + st.dt, psi + st.dt * k3);
        psi += (st.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += st.dt;
      }
      const double drift = std::abs(psi.norm() - 1.0);
      if (drift > opt.max_norm_drift)
        throw IntegrationError("driven Schrodinger norm drift " + fmt(drift) + " exceeds tolerance");
      record(i);
    }
    fill_metadata(r, "schrodinger-driven", st, false, red, psi0.space().dimension());
    if (!opt.keep_final.empty()) {
      const auto keep = sorted_keep(opt.keep_final);
      CMatrix<double> rho = partial_trace_supported<double>(psi0.space(), red.basis(), psi, keep);
      r.final_reduced = State::density(psi0.space().select(keep), rho / rho.trace(), 1e-6);
    }
    return r;
  };

  TrajectoryResult r = run(1.0);
  if (opt.step_halving_check) {
    const TrajectoryResult fine = run(2.0);
    r.step_halving_diff = max_series_diff(r, fine);
    r.metadata["step_halving_max_diff"] = fmt(*r.step_halving_diff);
  }
  return r;
}

std::vector<Observable> standard_observables(const ChainParams& p) {
  const auto space = p.space();
  const Index dim = space.dimension();
  auto projector = [&](Index i) {
    SparseXc s(dim, dim);
    s.insert(i, i) = cplx{1.0};
    return Operator(space, std::move(s));
  };
  std::vector<Observable> out;
  for (int j = 0; j < p.nodes; ++j) out.push_back({"P_1_" + std::to_string(j + 1), projector(flipped_index(p, j, kStorage))});
  out.push_back({"P_0", projector(ground_index(p))});

  Operator excited = Operator::zero(space);
  Operator photons = Operator::zero(space);
  const auto proj_e = transition(3, kExcited, kExcited, FactorKind::atom);
  const auto a = annihilation(p.n_max);
  const Operator n_ph = a.adjoint() * a;
  for (int j = 0; j < p.nodes; ++j) {
    excited += embed(proj_e, SpaceDescriptor::atom_factor(j), space);
    photons += embed(n_ph, SpaceDescriptor::cavity_factor(j), space);
  }
  out.push_back({"excited", excited});
  out.push_back({"photons", photons});
  out.push_back({"leakage", excited + photons});
  return out;
}

}  // namespace qtransfer
