// superop.hpp: linear maps on operators. Dense matrices act on
// column-stacked operators: vec(A X B) = (Bᵀ ⊗ A) vec(X).

#pragma once

#include <vector>

#include "gqfn/operator.hpp"

namespace gqfn {

inline Vector vec(const Matrix& x) {
  return Eigen::Map<const Vector>(x.data(), x.size());
}

inline Matrix unvec(const Vector& v, Index n) {
  if (v.size() != n * n) throw DomainError("unvec: length is not n^2");
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

/// Linear map on operators stored as a D²×D² matrix.
class SuperOperator {
 public:
  SuperOperator() : space_(), matrix_(Matrix::Zero(1, 1)) {}

  SuperOperator(HilbertSpec space, Matrix m) : space_(std::move(space)), matrix_(std::move(m)) {
    const Index n = space_.total_dim() * space_.total_dim();
    if (matrix_.rows() != n || matrix_.cols() != n) {
      throw DomainError("SuperOperator: matrix is not D^2 x D^2 for space " + space_.to_string());
    }
  }

  static SuperOperator zero(const HilbertSpec& space) {
    const Index n = space.total_dim() * space.total_dim();
    return SuperOperator(space, Matrix::Zero(n, n));
  }
  static SuperOperator identity(const HilbertSpec& space) {
    const Index n = space.total_dim() * space.total_dim();
    return SuperOperator(space, Matrix::Identity(n, n));
  }

  const HilbertSpec& space() const { return space_; }
  const Matrix& matrix() const { return matrix_; }
  Index dim() const { return space_.total_dim(); }

  Operator apply(const Operator& x) const {
    if (!(x.space() == space_)) throw DomainError("SuperOperator::apply: space mismatch");
    return Operator(space_, unvec(matrix_ * vec(x.matrix()), dim()));
  }
  Matrix apply(const Matrix& x) const { return unvec(matrix_ * vec(x), dim()); }

  /// Hilbert–Schmidt adjoint.
  SuperOperator adjoint() const { return SuperOperator(space_, matrix_.adjoint()); }

  /// (this ∘ other)(X) = this(other(X))
  SuperOperator compose(const SuperOperator& other) const {
    check_same(other);
    return SuperOperator(space_, matrix_ * other.matrix_);
  }

  SuperOperator& operator+=(const SuperOperator& o) {
    check_same(o);
    matrix_ += o.matrix_;
    return *this;
  }
  SuperOperator& operator-=(const SuperOperator& o) {
    check_same(o);
    matrix_ -= o.matrix_;
    return *this;
  }
  friend SuperOperator operator+(SuperOperator a, const SuperOperator& b) { return a += b; }
  friend SuperOperator operator-(SuperOperator a, const SuperOperator& b) { return a -= b; }
  friend SuperOperator operator*(cplx c, SuperOperator a) {
    a.matrix_ *= c;
    return a;
  }

  void check_same(const SuperOperator& o) const {
    if (!(space_ == o.space_)) throw DomainError("SuperOperator: space mismatch");
  }

 private:
  HilbertSpec space_;
  Matrix matrix_;
};

/// Frobenius norm of the difference of two superoperator matrices.
inline double superop_distance(const SuperOperator& a, const SuperOperator& b) {
  a.check_same(b);
  return (a.matrix() - b.matrix()).norm();
}

/// X ↦ A X B
inline SuperOperator sandwich(const Operator& a, const Operator& b) {
  a.check_same(b, "sandwich");
  return SuperOperator(a.space(), kron(b.matrix().transpose(), a.matrix()));
}

/// X ↦ A X
inline SuperOperator left_multiply(const Operator& a) {
  const Index n = a.dim();
  return SuperOperator(a.space(), kron(Matrix::Identity(n, n), a.matrix()));
}

/// X ↦ X B
inline SuperOperator right_multiply(const Operator& b) {
  const Index n = b.dim();
  return SuperOperator(b.space(), kron(b.matrix().transpose(), Matrix::Identity(n, n)));
}

/// X ↦ [X, B]
inline SuperOperator commutator_right(const Operator& b) {
  return right_multiply(b) - left_multiply(b);
}

/// X ↦ [A, X]
inline SuperOperator commutator_left(const Operator& a) {
  return left_multiply(a) - right_multiply(a);
}

/// Sum of terms c·A X B with either side optionally the identity. Lindbladians
/// are kept in this form so large spaces never need a D²×D² matrix.
class SandwichSum {
 public:
  struct Term {
    cplx c{1.0, 0.0};
    Matrix left;   // empty = identity
    Matrix right;  // empty = identity
  };

  SandwichSum() = default;
  explicit SandwichSum(HilbertSpec space) : space_(std::move(space)) {}

  const HilbertSpec& space() const { return space_; }
  const std::vector<Term>& terms() const { return terms_; }
  Index dim() const { return space_.total_dim(); }

  void add(cplx c, const Matrix& left, const Matrix& right) {
    if (c == cplx(0.0)) return;
    check_shape(left);
    check_shape(right);
    terms_.push_back(Term{c, left, right});
  }
  void add_left(cplx c, const Operator& a) { add(c, checked(a), Matrix()); }
  void add_right(cplx c, const Operator& b) { add(c, Matrix(), checked(b)); }
  void add_sandwich(cplx c, const Operator& a, const Operator& b) {
    add(c, checked(a), checked(b));
  }

  /// c·(A X B − ½ A B X − ½ X A B)
  void add_dissipator(cplx c, const Operator& a, const Operator& b) {
    const Operator ab = a * b;
    add_sandwich(c, a, b);
    add_left(-0.5 * c, ab);
    add_right(-0.5 * c, ab);
  }

  /// −i[X, H]
  void add_hamiltonian(const Operator& h) {
    add_left(kI, h);
    add_right(-kI, h);
  }

  void append(const SandwichSum& other) {
    if (!(other.space_ == space_)) throw DomainError("SandwichSum: space mismatch");
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  }

  Matrix apply(const Matrix& x) const {
    Matrix out = Matrix::Zero(dim(), dim());
    for (const Term& t : terms_) {
      if (t.left.size() == 0 && t.right.size() == 0) {
        out.noalias() += t.c * x;
      } else if (t.left.size() == 0) {
        out.noalias() += t.c * (x * t.right);
      } else if (t.right.size() == 0) {
        out.noalias() += t.c * (t.left * x);
      } else {
        out.noalias() += t.c * (t.left * x * t.right);
      }
    }
    return out;
  }
  Operator apply(const Operator& x) const { return Operator(space_, apply(x.matrix())); }

  /// Hilbert–Schmidt adjoint: c A X B ↦ c̄ A* Y B*.
  SandwichSum adjoint() const {
    SandwichSum r(space_);
    for (const Term& t : terms_) {
      r.terms_.push_back(Term{std::conj(t.c), t.left.adjoint(), t.right.adjoint()});
    }
    return r;
  }

  SuperOperator to_superoperator() const {
    const Index n = dim();
    const Matrix id = Matrix::Identity(n, n);
    Matrix m = Matrix::Zero(n * n, n * n);
    for (const Term& t : terms_) {
      const Matrix& l = t.left.size() ? t.left : id;
      const Matrix& r = t.right.size() ? t.right : id;
      m += t.c * kron(r.transpose(), l);
    }
    return SuperOperator(space_, std::move(m));
  }

 private:
  void check_shape(const Matrix& m) const {
    if (m.size() != 0 && (m.rows() != dim() || m.cols() != dim())) {
      throw DomainError("SandwichSum: operator shape mismatch");
    }
  }
  const Matrix& checked(const Operator& a) const {
    if (!(a.space() == space_)) throw DomainError("SandwichSum: operator space mismatch");
    return a.matrix();
  }

  HilbertSpec space_;
  std::vector<Term> terms_;
};

}  // namespace gqfn
