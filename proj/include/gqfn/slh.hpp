// slh.hpp: (S, L, H) models and their composition calculus.
//
// Storage is blockwise on the system space of dimension D. S is a dD×dD
// block matrix whose (j,k) block is the operator S_jk, and L is a dD×D column.
// Operator-valued scattering entries are therefore multiplied as ordinary
// block matrices.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gqfn/operator.hpp"

namespace gqfn {

class SlhModel {
 public:
  SlhModel() : SlhModel(HilbertSpec(), 1) {}

  /// Trivial (I, 0, 0) with `channels` channels.
  SlhModel(HilbertSpec space, Index channels) : space_(std::move(space)), d_(channels) {
    if (d_ < 1) throw DomainError("SlhModel: at least one channel required");
    const Index n = space_.total_dim();
    s_ = Matrix::Identity(d_ * n, d_ * n);
    l_ = Matrix::Zero(d_ * n, n);
    h_ = Matrix::Zero(n, n);
  }

  /// Raw block form; shapes checked, unitarity and self-adjointness are not
  /// (see check()).
  SlhModel(HilbertSpec space, Index channels, Matrix s_big, Matrix l_big, Matrix h)
      : space_(std::move(space)), d_(channels), s_(std::move(s_big)), l_(std::move(l_big)),
        h_(std::move(h)) {
    const Index n = space_.total_dim();
    if (d_ < 1) throw DomainError("SlhModel: at least one channel required");
    if (s_.rows() != d_ * n || s_.cols() != d_ * n) throw DomainError("SlhModel: S has wrong shape");
    if (l_.rows() != d_ * n || l_.cols() != n) throw DomainError("SlhModel: L has wrong shape");
    if (h_.rows() != n || h_.cols() != n) throw DomainError("SlhModel: H has wrong shape");
  }

  /// Scalar scattering matrix, operator couplings.
  static SlhModel from_scalar_s(const Matrix& s, const std::vector<Operator>& l, const Operator& h) {
    const Index d = static_cast<Index>(l.size());
    if (s.rows() != d || s.cols() != d) throw DomainError("SlhModel: S size differs from L length");
    const HilbertSpec& space = h.space();
    const Index n = space.total_dim();
    Matrix lb(d * n, n);
    for (Index k = 0; k < d; ++k) {
      h.check_same(l[k], "SlhModel");
      lb.middleRows(k * n, n) = l[k].matrix();
    }
    return SlhModel(space, d, kron(s, Matrix::Identity(n, n)), std::move(lb), h.matrix());
  }

  static SlhModel from_couplings(const std::vector<Operator>& l, const Operator& h) {
    const Index d = static_cast<Index>(l.size());
    return from_scalar_s(Matrix::Identity(d, d), l, h);
  }

  static SlhModel trivial(const HilbertSpec& space, Index channels) { return SlhModel(space, channels); }

  /// (S, 0, 0) with scalar S.
  static SlhModel scattering(const HilbertSpec& space, const Matrix& s) {
    const Index n = space.total_dim();
    const Index d = s.rows();
    return SlhModel(space, d, kron(s, Matrix::Identity(n, n)), Matrix::Zero(d * n, n), Matrix::Zero(n, n));
  }

  const HilbertSpec& space() const { return space_; }
  Index channels() const { return d_; }
  Index dim() const { return space_.total_dim(); }

  const Matrix& s_big() const { return s_; }
  const Matrix& l_big() const { return l_; }
  const Matrix& h_matrix() const { return h_; }

  Operator s(Index j, Index k) const {
    const Index n = dim();
    return Operator(space_, s_.block(j * n, k * n, n, n));
  }
  Operator l(Index k) const {
    if (k < 0 || k >= d_) throw DomainError("SlhModel: channel index out of range");
    return Operator(space_, l_.middleRows(k * dim(), dim()));
  }
  std::vector<Operator> l_column() const {
    std::vector<Operator> out;
    for (Index k = 0; k < d_; ++k) out.push_back(l(k));
    return out;
  }
  Operator h() const { return Operator(space_, h_); }

  /// max |S*S − I| over the block matrix.
  double unitarity_residual() const {
    const Index n = s_.rows();
    return std::max(max_abs_diff(s_.adjoint() * s_, Matrix::Identity(n, n)),
                    max_abs_diff(s_ * s_.adjoint(), Matrix::Identity(n, n)));
  }
  double hermiticity_residual() const { return max_abs_diff(h_, h_.adjoint()); }

  bool check(double tol) const { return unitarity_residual() <= tol && hermiticity_residual() <= tol; }

 private:
  HilbertSpec space_;
  Index d_;
  Matrix s_;
  Matrix l_;
  Matrix h_;
};

/// Largest componentwise entry difference between two models.
inline double model_distance(const SlhModel& a, const SlhModel& b) {
  if (!(a.space() == b.space()) || a.channels() != b.channels()) {
    throw DomainError("model_distance: models differ in space or channel count");
  }
  return std::max({max_abs_diff(a.s_big(), b.s_big()), max_abs_diff(a.l_big(), b.l_big()),
                   max_abs_diff(a.h_matrix(), b.h_matrix())});
}

/// Im{C} = (C − C*)/2i
inline Matrix im_part(const Matrix& c) { return (c - c.adjoint()) / (2.0 * kI); }

/// gb ◁ ga: output of ga fed into gb.
inline SlhModel series(const SlhModel& gb, const SlhModel& ga) {
  if (gb.channels() != ga.channels()) throw DomainError("series: channel counts differ");
  if (!(gb.space() == ga.space())) throw DomainError("series: models live on different spaces");
  Matrix s = gb.s_big() * ga.s_big();
  Matrix l = gb.l_big() + gb.s_big() * ga.l_big();
  Matrix h = ga.h_matrix() + gb.h_matrix() + im_part(gb.l_big().adjoint() * gb.s_big() * ga.l_big());
  return SlhModel(ga.space(), ga.channels(), std::move(s), std::move(l), std::move(h));
}

/// g1 ⊞ g2: channels of g1 first.
inline SlhModel concat(const SlhModel& g1, const SlhModel& g2) {
  if (!(g1.space() == g2.space())) throw DomainError("concat: models live on different spaces");
  const Index n = g1.dim();
  const Index d = g1.channels() + g2.channels();
  Matrix s = Matrix::Zero(d * n, d * n);
  s.topLeftCorner(g1.s_big().rows(), g1.s_big().cols()) = g1.s_big();
  s.bottomRightCorner(g2.s_big().rows(), g2.s_big().cols()) = g2.s_big();
  Matrix l(d * n, n);
  l << g1.l_big(), g2.l_big();
  return SlhModel(g1.space(), d, std::move(s), std::move(l), g1.h_matrix() + g2.h_matrix());
}

inline constexpr double kStaticTol = 1e-12;

/// If every block of `s_big` is c·I, the scalar matrix of the c's.
inline std::optional<Matrix> scalar_scattering(const Matrix& s_big, Index channels, double tol = kStaticTol) {
  const Index n = s_big.rows() / channels;
  Matrix c(channels, channels);
  for (Index j = 0; j < channels; ++j) {
    for (Index k = 0; k < channels; ++k) {
      const Matrix blk = s_big.block(j * n, k * n, n, n);
      const cplx val = blk.trace() / static_cast<double>(n);
      if (max_abs_diff(blk, val * Matrix::Identity(n, n)) > tol) return std::nullopt;
      c(j, k) = val;
    }
  }
  return c;
}

/// Scalar entries and a unitary scalar matrix.
inline bool is_static(const SlhModel& g, double tol = kStaticTol) {
  const auto c = scalar_scattering(g.s_big(), g.channels(), tol);
  if (!c) return false;
  const Index d = c->rows();
  return max_abs_diff(c->adjoint() * *c, Matrix::Identity(d, d)) <= tol;
}

/// (S, L, H) ↦ (I, S*L, H) for static S.
inline SlhModel rotate_out_scattering(const SlhModel& g) {
  if (!is_static(g)) throw DomainError("rotate_out_scattering: scattering matrix is not static");
  const Index n = g.dim();
  const Index d = g.channels();
  return SlhModel(g.space(), d, Matrix::Identity(d * n, d * n), g.s_big().adjoint() * g.l_big(), g.h_matrix());
}

/// Model on `g.space() ⊗ extra` acting trivially on `extra`.
inline SlhModel extend_right(const SlhModel& g, const HilbertSpec& extra) {
  const Index m = extra.total_dim();
  const Index n = g.dim();
  const Index d = g.channels();
  const Matrix im = Matrix::Identity(m, m);
  Matrix l(d * n * m, n * m);
  for (Index k = 0; k < d; ++k) l.middleRows(k * n * m, n * m) = kron(g.l_big().middleRows(k * n, n), im);
  Matrix s(d * n * m, d * n * m);
  for (Index j = 0; j < d; ++j) {
    for (Index k = 0; k < d; ++k) {
      s.block(j * n * m, k * n * m, n * m, n * m) = kron(g.s_big().block(j * n, k * n, n, n), im);
    }
  }
  return SlhModel(g.space().tensor(extra), d, std::move(s), std::move(l), kron(g.h_matrix(), im));
}

/// Model on `extra ⊗ g.space()` acting trivially on `extra`.
inline SlhModel extend_left(const HilbertSpec& extra, const SlhModel& g) {
  const Index m = extra.total_dim();
  const Index n = g.dim();
  const Index d = g.channels();
  const Matrix im = Matrix::Identity(m, m);
  Matrix l(d * n * m, n * m);
  for (Index k = 0; k < d; ++k) l.middleRows(k * n * m, n * m) = kron(im, g.l_big().middleRows(k * n, n));
  Matrix s(d * n * m, d * n * m);
  for (Index j = 0; j < d; ++j) {
    for (Index k = 0; k < d; ++k) {
      s.block(j * n * m, k * n * m, n * m, n * m) = kron(im, g.s_big().block(j * n, k * n, n, n));
    }
  }
  return SlhModel(extra.tensor(g.space()), d, std::move(s), std::move(l), kron(im, g.h_matrix()));
}

/// Self-adjoint Stratonovich increment dE = E_jk dΛ_jk + E_j0 dA_j* + E_0k dA_k + E_00 dt.
/// e_ll is the dD×dD block matrix (E_jk), e_col the dD×D column (E_j0).
struct StratonovichGenerator {
  HilbertSpec space;
  Index channels;
  Matrix e_ll;
  Matrix e_col;
  Matrix e_00;

  double self_adjointness_residual() const {
    return std::max(max_abs_diff(e_ll, e_ll.adjoint()), max_abs_diff(e_00, e_00.adjoint()));
  }
};

/// dU = −i dE ∘ U solved for the Itō coefficients.
inline SlhModel cayley(const StratonovichGenerator& e, double tol = 1e-12) {
  const Index n = e.space.total_dim();
  const Index big = e.channels * n;
  if (e.e_ll.rows() != big || e.e_ll.cols() != big || e.e_col.rows() != big || e.e_col.cols() != n ||
      e.e_00.rows() != n || e.e_00.cols() != n) {
    throw DomainError("cayley: generator blocks have inconsistent shapes");
  }
  if (e.self_adjointness_residual() > tol) throw DomainError("cayley: generator is not self-adjoint");
  const Matrix id = Matrix::Identity(big, big);
  const Matrix a = id + 0.5 * kI * e.e_ll;
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw NumericalError("cayley: I + iE/2 is singular");
  const Matrix r = lu.inverse();
  Matrix s = r * (id - 0.5 * kI * e.e_ll);
  Matrix l = -kI * r * e.e_col;
  Matrix h = e.e_00 + 0.5 * e.e_col.adjoint() * im_part(r) * e.e_col;
  h = 0.5 * (h + h.adjoint());
  return SlhModel(e.space, e.channels, std::move(s), std::move(l), std::move(h));
}

/// Single-channel model with S = I doubled into (A₊, A₋) channels:
/// L₊ = √(n+1)L, L₋ = −√n L*.
inline SlhModel thermal_doubled(const SlhModel& g, double n) {
  if (g.channels() != 1) throw DomainError("thermal_doubled: single-channel model required");
  if (!is_static(g) || std::abs(g.s_big()(0, 0) - 1.0) > kStaticTol) {
    throw DomainError("thermal_doubled: scattering must be trivial");
  }
  if (n < 0) throw DomainError("thermal_doubled: n must be >= 0");
  const Operator l = g.l(0);
  return SlhModel::from_couplings({std::sqrt(n + 1.0) * l, -std::sqrt(n) * l.adjoint()}, g.h());
}

/// Vacuum series product applied to the two doubled models.
inline SlhModel naive_doubled_series(const SlhModel& ga, const SlhModel& gb, double n) {
  return series(thermal_doubled(gb, n), thermal_doubled(ga, n));
}

/// n·Im[L_B*, L_A]
inline Operator spurious_term(const SlhModel& ga, const SlhModel& gb, double n) {
  const Matrix lb = gb.l_big();
  const Matrix la = ga.l_big();
  return Operator(ga.space(), n * im_part(lb.adjoint() * la - la * lb.adjoint()));
}

}  // namespace gqfn
