// operator.hpp: truncated tensor-product spaces and dense operators on them.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "gqfn/error.hpp"

namespace gqfn {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr cplx kI{0.0, 1.0};

/// Ordered list of factor dimensions. Factor 0 is the leftmost Kronecker factor.
class HilbertSpec {
 public:
  HilbertSpec() : dims_{1} {}

  explicit HilbertSpec(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw DomainError("HilbertSpec: at least one factor required");
    for (std::size_t d : dims_) {
      if (d < 1) throw DomainError("HilbertSpec: factor dimensions must be >= 1");
    }
  }

  HilbertSpec(std::initializer_list<std::size_t> dims)
      : HilbertSpec(std::vector<std::size_t>(dims)) {}

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t factors() const { return dims_.size(); }

  std::size_t dim(std::size_t factor) const {
    if (factor >= dims_.size()) throw DomainError("HilbertSpec: factor index out of range");
    return dims_[factor];
  }

  Index total_dim() const {
    return static_cast<Index>(
        std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>()));
  }

  /// Space of this ⊗ other (factors of `other` appended).
  HilbertSpec tensor(const HilbertSpec& other) const {
    std::vector<std::size_t> d = dims_;
    d.insert(d.end(), other.dims_.begin(), other.dims_.end());
    return HilbertSpec(std::move(d));
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

  bool operator==(const HilbertSpec&) const = default;

 private:
  std::vector<std::size_t> dims_;
};

inline Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

/// Entrywise max |a - b|; shapes must agree.
inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DomainError("max_abs_diff: shape mismatch");
  }
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

/// Dense operator on a HilbertSpec.
class Operator {
 public:
  Operator() : space_(), matrix_(Matrix::Zero(1, 1)) {}

  Operator(HilbertSpec space, Matrix m) : space_(std::move(space)), matrix_(std::move(m)) {
    const Index n = space_.total_dim();
    if (matrix_.rows() != n || matrix_.cols() != n) {
      throw DomainError("Operator: matrix shape does not match space " + space_.to_string());
    }
  }

  static Operator identity(const HilbertSpec& space) {
    const Index n = space.total_dim();
    return Operator(space, Matrix::Identity(n, n));
  }
  static Operator zero(const HilbertSpec& space) {
    const Index n = space.total_dim();
    return Operator(space, Matrix::Zero(n, n));
  }
  static Operator scalar(const HilbertSpec& space, cplx c) {
    const Index n = space.total_dim();
    return Operator(space, c * Matrix::Identity(n, n));
  }

  const HilbertSpec& space() const { return space_; }
  const Matrix& matrix() const { return matrix_; }
  Index dim() const { return matrix_.rows(); }

  Operator adjoint() const { return Operator(space_, matrix_.adjoint()); }
  cplx trace() const { return matrix_.trace(); }

  /// max |X - X*|
  double hermiticity_residual() const { return max_abs_diff(matrix_, matrix_.adjoint()); }

  Operator& operator+=(const Operator& o) {
    check_same(o, "+");
    matrix_ += o.matrix_;
    return *this;
  }
  Operator& operator-=(const Operator& o) {
    check_same(o, "-");
    matrix_ -= o.matrix_;
    return *this;
  }
  Operator& operator*=(cplx c) {
    matrix_ *= c;
    return *this;
  }

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator-(Operator a) {
    a.matrix_ = -a.matrix_;
    return a;
  }
  friend Operator operator*(const Operator& a, const Operator& b) {
    a.check_same(b, "*");
    return Operator(a.space_, a.matrix_ * b.matrix_);
  }
  friend Operator operator*(cplx c, Operator a) { return a *= c; }
  friend Operator operator*(Operator a, cplx c) { return a *= c; }
  friend Operator operator*(double c, Operator a) { return a *= cplx(c); }

  void check_same(const Operator& o, const char* what) const {
    if (!(space_ == o.space_)) {
      throw DomainError(std::string("Operator ") + what + ": space mismatch " +
                        space_.to_string() + " vs " + o.space_.to_string());
    }
  }

 private:
  HilbertSpec space_;
  Matrix matrix_;
};

inline double max_abs_diff(const Operator& a, const Operator& b) {
  a.check_same(b, "compare");
  return max_abs_diff(a.matrix(), b.matrix());
}

inline Operator commutator(const Operator& x, const Operator& y) { return x * y - y * x; }

/// Lifts a single-factor matrix to the full space: I ⊗ … ⊗ op ⊗ … ⊗ I.
inline Operator embed(const Matrix& local, const HilbertSpec& space, std::size_t factor) {
  const std::size_t d = space.dim(factor);
  if (local.rows() != static_cast<Index>(d) || local.cols() != static_cast<Index>(d)) {
    throw DomainError("embed: operator dimension " + std::to_string(local.rows()) +
                      " does not match factor dimension " + std::to_string(d));
  }
  Index before = 1;
  Index after = 1;
  for (std::size_t f = 0; f < space.factors(); ++f) {
    if (f < factor) before *= static_cast<Index>(space.dims()[f]);
    if (f > factor) after *= static_cast<Index>(space.dims()[f]);
  }
  Matrix m = kron(kron(Matrix::Identity(before, before), local), Matrix::Identity(after, after));
  return Operator(space, std::move(m));
}

/// X ⊗ I_extra: operator on `x.space()` extended to `x.space() ⊗ extra`.
inline Operator extend(const Operator& x, const HilbertSpec& extra) {
  const Index n = extra.total_dim();
  return Operator(x.space().tensor(extra), kron(x.matrix(), Matrix::Identity(n, n)));
}

/// Truncated lowering matrix: (a)_{i,i+1} = sqrt(i+1).
inline Matrix ladder_matrix(std::size_t dim) {
  if (dim < 2) throw DomainError("annihilator: factor dimension must be >= 2");
  const Index n = static_cast<Index>(dim);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) a(i, i + 1) = std::sqrt(static_cast<double>(i + 1));
  return a;
}

inline Operator annihilator(const HilbertSpec& space, std::size_t factor) {
  return embed(ladder_matrix(space.dim(factor)), space, factor);
}

inline Operator creator(const HilbertSpec& space, std::size_t factor) {
  return annihilator(space, factor).adjoint();
}

inline Operator number_operator(const HilbertSpec& space, std::size_t factor) {
  const Operator a = annihilator(space, factor);
  return a.adjoint() * a;
}

// Qubit matrices use basis {|0>=g, |1>=e}; sigma_minus = |g><e|.
namespace qubit {

inline Matrix sigma_minus() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}
inline Matrix sigma_plus() { return sigma_minus().adjoint(); }
inline Matrix sigma_z() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}
inline Matrix sigma_x() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}
inline Matrix sigma_y() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = cplx(0, -1);
  m(1, 0) = cplx(0, 1);
  return m;
}

}  // namespace qubit

inline void require_qubit(const HilbertSpec& space, std::size_t factor) {
  if (space.dim(factor) != 2) {
    throw DomainError("qubit operator on factor " + std::to_string(factor) + " of dimension " +
                      std::to_string(space.dim(factor)));
  }
}

inline Operator sigma_minus(const HilbertSpec& space, std::size_t factor) {
  require_qubit(space, factor);
  return embed(qubit::sigma_minus(), space, factor);
}
inline Operator sigma_plus(const HilbertSpec& space, std::size_t factor) {
  require_qubit(space, factor);
  return embed(qubit::sigma_plus(), space, factor);
}
inline Operator sigma_z(const HilbertSpec& space, std::size_t factor) {
  require_qubit(space, factor);
  return embed(qubit::sigma_z(), space, factor);
}

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kPinvCutoff = 1e-12;

/// Moore–Penrose inverse via SVD.
inline Matrix pinv(const Matrix& m, double rcond = kPinvCutoff) {
  if (m.size() == 0) return Matrix(m.cols(), m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = rcond * (s.size() ? s(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

/// Orthogonal projector onto ran(m).
inline Matrix range_projector(const Matrix& m, double rcond = kPinvCutoff) {
  return m * pinv(m, rcond);
}

struct PsdReport {
  bool psd = false;
  double min_eigenvalue = 0.0;
  double hermiticity_residual = 0.0;
  explicit operator bool() const { return psd; }
};

/// Hermitian within tol and smallest eigenvalue >= -tol.
inline PsdReport is_psd(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw DomainError("is_psd: matrix must be square");
  PsdReport r;
  if (m.size() == 0) {
    r.psd = true;
    return r;
  }
  r.hermiticity_residual = max_abs_diff(m, m.adjoint());
  const Matrix herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.psd = r.hermiticity_residual <= tol && r.min_eigenvalue >= -tol;
  return r;
}

/// Matrix exponential (Padé approximant with scaling and squaring).
inline Matrix matexp(const Matrix& m) {
  if (m.rows() != m.cols()) throw DomainError("matexp: matrix must be square");
  if (m.size() == 0) return m;
  return m.exp();
}

}  // namespace gqfn
