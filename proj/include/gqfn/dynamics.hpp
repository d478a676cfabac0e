// dynamics.hpp: time evolution under a fixed generator, and steady states.
//
// Two evolution backends: exact exponentials of the D²×D² generator for small
// spaces, and a fixed-step RK4 propagator acting on sandwich terms for large
// ones. Callers pick one explicitly.

#pragma once

#include <Eigen/SparseCore>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gqfn/superop.hpp"

namespace gqfn {

inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPositivityTol = 1e-8;
inline constexpr double kLeakWarn = 1e-6;

/// e^{tℒ} X
inline Operator heisenberg_semigroup(const SuperOperator& lind, double t, const Operator& x) {
  if (t < 0) throw DomainError("heisenberg_semigroup: t must be >= 0");
  if (t == 0) return x;
  const Matrix e = matexp(t * lind.matrix());
  return Operator(x.space(), unvec(e * vec(x.matrix()), x.dim()));
}

/// e^{tK} for dissipative K (K + K* ≤ 0).
inline Operator contraction_semigroup(const Operator& k, double t, double tol = 1e-10) {
  if (t < 0) throw DomainError("contraction_semigroup: t must be >= 0");
  const Matrix herm = k.matrix() + k.matrix().adjoint();
  const PsdReport r = is_psd(-herm, tol * std::max(1.0, herm.cwiseAbs().maxCoeff()));
  if (!r.psd) throw DomainError("contraction_semigroup: K is not dissipative (K + K* has positive part)");
  return Operator(k.space(), matexp(t * k.matrix()));
}

/// Largest singular value; the operator norm.
inline double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

class DensityOperator {
 public:
  DensityOperator(HilbertSpec space, Matrix rho, double tol = kTraceTol) : op_(std::move(space), std::move(rho)) {
    const Matrix& m = op_.matrix();
    if (std::abs(m.trace() - 1.0) > tol) throw ValidationError("DensityOperator: trace is not 1");
    if (op_.hermiticity_residual() > tol) throw ValidationError("DensityOperator: matrix is not hermitian");
    const PsdReport r = is_psd(m, tol);
    if (!r.psd) throw ValidationError("DensityOperator: matrix has a negative eigenvalue");
  }

  /// |i><i| in the computational basis of the full space.
  static DensityOperator basis_state(const HilbertSpec& space, Index i) {
    const Index n = space.total_dim();
    if (i < 0 || i >= n) throw DomainError("basis_state: index out of range");
    Matrix m = Matrix::Zero(n, n);
    m(i, i) = 1.0;
    return DensityOperator(space, std::move(m));
  }

  /// Product state |i0, i1, ...><...| from per-factor levels.
  static DensityOperator product_basis_state(const HilbertSpec& space, const std::vector<std::size_t>& levels) {
    if (levels.size() != space.factors()) throw DomainError("product_basis_state: one level per factor required");
    Index idx = 0;
    for (std::size_t f = 0; f < space.factors(); ++f) {
      if (levels[f] >= space.dim(f)) throw DomainError("product_basis_state: level out of range");
      idx = idx * static_cast<Index>(space.dim(f)) + static_cast<Index>(levels[f]);
    }
    return basis_state(space, idx);
  }

  const HilbertSpec& space() const { return op_.space(); }
  const Matrix& matrix() const { return op_.matrix(); }
  const Operator& op() const { return op_; }

  cplx expect(const Operator& x) const {
    op_.check_same(x, "expect");
    return (op_.matrix() * x.matrix()).trace();
  }

 private:
  Operator op_;
};

/// ρ₁ ⊗ ρ₂
inline DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  return DensityOperator(a.space().tensor(b.space()), kron(a.matrix(), b.matrix()));
}

/// Population of the top level of one factor.
inline double top_level_population(const Matrix& rho, const HilbertSpec& space, std::size_t factor) {
  const std::size_t d = space.dim(factor);
  Index after = 1;
  for (std::size_t f = factor + 1; f < space.factors(); ++f) after *= static_cast<Index>(space.dims()[f]);
  double pop = 0.0;
  for (Index i = 0; i < rho.rows(); ++i) {
    if ((i / after) % static_cast<Index>(d) == static_cast<Index>(d) - 1) pop += rho(i, i).real();
  }
  return pop;
}

struct EvolveOptions {
  /// Mode factors whose top Fock level is monitored.
  std::vector<std::size_t> leak_factors;
  double leak_warn = kLeakWarn;
  /// Leak above this aborts the run; <= 0 disables.
  double leak_fail = 0.0;
  double trace_tol = kTraceTol;
  double positivity_tol = kPositivityTol;
};

struct StateTrajectory {
  std::vector<double> times;
  std::vector<Matrix> states;
  std::vector<std::string> warnings;
  double max_leak = 0.0;
  double max_trace_error = 0.0;
  double min_eigenvalue = 0.0;
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("time grid is empty");
  if (grid.front() < 0) throw DomainError("time grid must start at t >= 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw DomainError("time grid must be strictly increasing");
  }
}

inline void monitor(StateTrajectory& out, const Matrix& rho, double t, const HilbertSpec& space,
                    const EvolveOptions& opt) {
  const double terr = std::abs(rho.trace() - 1.0);
  out.max_trace_error = std::max(out.max_trace_error, terr);
  if (terr > opt.trace_tol) {
    throw NumericalError("master equation: trace drift " + std::to_string(terr) + " at t=" + std::to_string(t));
  }
  const Matrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  out.min_eigenvalue = std::min(out.min_eigenvalue, lmin);
  if (lmin < -opt.positivity_tol) {
    throw NumericalError("master equation: positivity lost (min eigenvalue " + std::to_string(lmin) +
                         ") at t=" + std::to_string(t));
  }
  for (std::size_t f : opt.leak_factors) {
    const double leak = top_level_population(rho, space, f);
    out.max_leak = std::max(out.max_leak, leak);
    if (opt.leak_fail > 0 && leak > opt.leak_fail) {
      throw NumericalError("truncation leak: top level of factor " + std::to_string(f) + " holds " +
                           std::to_string(leak) + " at t=" + std::to_string(t));
    }
    if (leak > opt.leak_warn) {
      out.warnings.push_back("truncation leak " + std::to_string(leak) + " on factor " + std::to_string(f) +
                             " at t=" + std::to_string(t));
    }
  }
}

}  // namespace detail

/// ρ̇ = ℒ†ρ with exact exponentials between grid points.
inline StateTrajectory master_evolve(const SuperOperator& lind, const DensityOperator& rho0,
                                     const std::vector<double>& grid, const EvolveOptions& opt = {}) {
  if (!(lind.space() == rho0.space())) throw DomainError("master_evolve: space mismatch");
  detail::check_grid(grid);
  const Matrix gen = lind.matrix().adjoint();
  const Index n = rho0.space().total_dim();
  StateTrajectory out;
  Vector v = vec(rho0.matrix());
  double t = 0.0;
  double last_dt = -1.0;
  Matrix step;
  for (double tg : grid) {
    const double dt = tg - t;
    if (dt > 0) {
      if (std::abs(dt - last_dt) > 1e-15 * std::max(1.0, dt)) {
        step = matexp(dt * gen);
        last_dt = dt;
      }
      v = step * v;
      t = tg;
    }
    Matrix rho = unvec(v, n);
    detail::monitor(out, rho, tg, rho0.space(), opt);
    out.times.push_back(tg);
    out.states.push_back(std::move(rho));
  }
  return out;
}

using SparseMatrix = Eigen::SparseMatrix<cplx>;

inline SparseMatrix to_sparse(const Matrix& m, double drop = 0.0) {
  return m.sparseView(1.0, drop);
}

/// Fixed-step RK4 for Ẏ = Σ c A Y B, with all one-sided terms merged and
/// every operator held sparse.
class Rk4Propagator {
 public:
  explicit Rk4Propagator(const SandwichSum& gen) : space_(gen.space()), n_(gen.dim()) {
    Matrix left = Matrix::Zero(n_, n_);
    Matrix right = Matrix::Zero(n_, n_);
    bool has_left = false, has_right = false;
    for (const auto& t : gen.terms()) {
      const bool li = t.left.size() == 0;
      const bool ri = t.right.size() == 0;
      if (li && ri) {
        left += t.c * Matrix::Identity(n_, n_);
        has_left = true;
      } else if (ri) {
        left += t.c * t.left;
        has_left = true;
      } else if (li) {
        right += t.c * t.right;
        has_right = true;
      } else {
        pairs_.push_back({to_sparse(t.c * t.left), to_sparse(t.right)});
      }
    }
    if (has_left) left_ = to_sparse(left);
    if (has_right) right_ = to_sparse(right);
    has_left_ = has_left;
    has_right_ = has_right;
  }

  const HilbertSpec& space() const { return space_; }

  Matrix rhs(const Matrix& y) const {
    Matrix out = Matrix::Zero(n_, n_);
    if (has_left_) out.noalias() += left_ * y;
    if (has_right_) out.noalias() += y * right_;
    for (const auto& p : pairs_) {
      const Matrix ay = p.first * y;
      out.noalias() += ay * p.second;
    }
    return out;
  }

  /// Operator-norm estimate of the generator, from power iteration on 𝒢*𝒢
  /// in the Hilbert–Schmidt inner product.
  double norm_estimate(int iterations = 60) const {
    Matrix x = Matrix::Ones(n_, n_) + kI * Matrix::Identity(n_, n_);
    for (Index i = 0; i < n_; ++i) {
      for (Index j = 0; j < n_; ++j) x(i, j) += 0.01 * static_cast<double>((i * 7 + j * 13) % 11);
    }
    x /= x.norm();
    const Rk4Propagator adj = adjoint_of();
    double est = 0.0;
    for (int it = 0; it < iterations; ++it) {
      Matrix y = adj.rhs(rhs(x));
      const double nrm = y.norm();
      if (nrm == 0.0) return 0.0;
      est = std::sqrt(nrm);
      x = y / nrm;
    }
    return est;
  }

  void step(Matrix& y, double h) const {
    const Matrix k1 = rhs(y);
    const Matrix k2 = rhs(y + 0.5 * h * k1);
    const Matrix k3 = rhs(y + 0.5 * h * k2);
    const Matrix k4 = rhs(y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

 private:
  Rk4Propagator(HilbertSpec space, Index n) : space_(std::move(space)), n_(n) {}

  Rk4Propagator adjoint_of() const {
    Rk4Propagator a(space_, n_);
    a.has_left_ = has_left_;
    a.has_right_ = has_right_;
    if (has_left_) a.left_ = left_.adjoint();
    if (has_right_) a.right_ = right_.adjoint();
    for (const auto& p : pairs_) a.pairs_.push_back({p.first.adjoint(), p.second.adjoint()});
    return a;
  }

  HilbertSpec space_;
  Index n_;
  bool has_left_ = false;
  bool has_right_ = false;
  SparseMatrix left_;
  SparseMatrix right_;
  std::vector<std::pair<SparseMatrix, SparseMatrix>> pairs_;
};

struct Rk4Options {
  /// Requested step; 0 picks 0.1/‖𝒢‖.
  double h = 0.0;
  /// Largest admissible h·‖𝒢‖.
  double stability_bound = 0.1;
  /// Precomputed norm; <= 0 estimates it.
  double norm = 0.0;
};

struct Rk4Info {
  double h = 0.0;
  double norm = 0.0;
  long steps = 0;
};

namespace detail {

/// Largest step ≤ h_max dividing `interval` into whole steps.
inline std::pair<double, long> snap_step(double interval, double h_max) {
  const long k = std::max(1L, static_cast<long>(std::ceil(interval / h_max - 1e-9)));
  return {interval / static_cast<double>(k), k};
}

inline double choose_step(const Rk4Propagator& p, const Rk4Options& opt, Rk4Info& info) {
  info.norm = opt.norm > 0 ? opt.norm : p.norm_estimate();
  const double bound = info.norm > 0 ? opt.stability_bound / info.norm : 1.0;
  if (opt.h > 0) {
    if (opt.h > bound * (1.0 + 1e-12)) {
      throw NumericalError("rk4: step " + std::to_string(opt.h) + " violates h*|L| <= " +
                           std::to_string(opt.stability_bound) + " (|L| ~ " + std::to_string(info.norm) + ")");
    }
    return opt.h;
  }
  return bound;
}

}  // namespace detail

/// Heisenberg picture: X(t) = e^{tℒ}X via RK4 on the sandwich form.
inline Operator heisenberg_rk4(const SandwichSum& lind, double t, const Operator& x, const Rk4Options& opt = {},
                               Rk4Info* info_out = nullptr) {
  if (t < 0) throw DomainError("heisenberg_rk4: t must be >= 0");
  const Rk4Propagator p(lind);
  Rk4Info info;
  const double hmax = detail::choose_step(p, opt, info);
  Matrix y = x.matrix();
  if (t > 0) {
    const auto [h, steps] = detail::snap_step(t, hmax);
    info.h = h;
    for (long s = 0; s < steps; ++s) p.step(y, h);
    info.steps = steps;
  }
  if (info_out) *info_out = info;
  return Operator(x.space(), y);
}

/// Schrödinger picture ρ̇ = ℒ†ρ by RK4; the step divides every grid interval.
inline StateTrajectory master_evolve_rk4(const SandwichSum& lind, const DensityOperator& rho0,
                                         const std::vector<double>& grid, const EvolveOptions& opt = {},
                                         const Rk4Options& ropt = {}, Rk4Info* info_out = nullptr) {
  if (!(lind.space() == rho0.space())) throw DomainError("master_evolve_rk4: space mismatch");
  detail::check_grid(grid);
  const Rk4Propagator p(lind.adjoint());
  Rk4Info info;
  const double hmax = detail::choose_step(p, ropt, info);
  StateTrajectory out;
  Matrix rho = rho0.matrix();
  double t = 0.0;
  for (double tg : grid) {
    if (tg > t) {
      const auto [h, steps] = detail::snap_step(tg - t, hmax);
      for (long s = 0; s < steps; ++s) p.step(rho, h);
      info.h = std::max(info.h, h);
      info.steps += steps;
      t = tg;
    }
    detail::monitor(out, rho, tg, rho0.space(), opt);
    out.times.push_back(tg);
    out.states.push_back(rho);
  }
  if (info_out) *info_out = info;
  return out;
}

/// Unique stationary state of ℒ†.
inline DensityOperator steady_state(const SuperOperator& lind, double kernel_tol = 1e-9) {
  const Matrix gen = lind.matrix().adjoint();
  Eigen::BDCSVD<Matrix> svd(gen, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  Index kernel = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) <= kernel_tol * std::max(1.0, smax)) ++kernel;
  }
  if (kernel != 1) {
    throw NumericalError("steady_state: kernel of the generator has dimension " + std::to_string(kernel));
  }
  const Index n = lind.dim();
  Matrix rho = unvec(svd.matrixV().col(s.size() - 1), n);
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace();
  const double res = (gen * vec(rho)).norm();
  if (res > 1e-10 * std::max(1.0, smax)) {
    throw NumericalError("steady_state: residual " + std::to_string(res) + " too large");
  }
  // Tiny negative eigenvalues from round-off are tolerated by DensityOperator's tolerance.
  return DensityOperator(lind.space(), std::move(rho), 1e-9);
}

/// Expectation-value table, one column per observable.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::string> labels;
  std::vector<std::vector<cplx>> values;  // values[column][time]
  std::vector<bool> complex_column;

  void add_column(std::string label, std::vector<cplx> col, bool is_complex) {
    if (col.size() != times.size()) throw DomainError("Trajectory: column length differs from time count");
    labels.push_back(std::move(label));
    values.push_back(std::move(col));
    complex_column.push_back(is_complex);
  }
};

/// Formats a double with 17 significant digits.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// ⟨X_j⟩(t) for each observable; a column is complex unless X_j is hermitian.
inline Trajectory expectations(const StateTrajectory& st, const std::vector<std::string>& labels,
                               const std::vector<Operator>& observables) {
  if (labels.size() != observables.size()) throw DomainError("expectations: one label per observable");
  Trajectory tr;
  tr.times = st.times;
  for (std::size_t j = 0; j < observables.size(); ++j) {
    std::vector<cplx> col;
    for (const auto& rho : st.states) col.push_back((rho * observables[j].matrix()).trace());
    tr.add_column(labels[j], std::move(col), observables[j].hermiticity_residual() > 1e-12);
  }
  return tr;
}

/// CSV with header "t,label,..."; complex columns become label_re,label_im.
inline void write_csv(std::ostream& os, const Trajectory& tr, const std::string& time_label = "t") {
  os << time_label;
  for (std::size_t j = 0; j < tr.labels.size(); ++j) {
    if (tr.complex_column[j]) {
      os << ',' << tr.labels[j] << "_re," << tr.labels[j] << "_im";
    } else {
      os << ',' << tr.labels[j];
    }
  }
  os << '\n';
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    os << fmt17(tr.times[i]);
    for (std::size_t j = 0; j < tr.labels.size(); ++j) {
      const cplx v = tr.values[j][i];
      os << ',' << fmt17(v.real());
      if (tr.complex_column[j]) os << ',' << fmt17(v.imag());
    }
    os << '\n';
  }
}

}  // namespace gqfn
