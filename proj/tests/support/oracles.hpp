// Independent reference formulas, written with plain operator arithmetic.
#pragma once

#include <functional>

#include "gqfn/gaussian.hpp"
#include "gqfn/generators.hpp"
#include "gqfn/slh.hpp"
#include "gqfn/superop.hpp"

namespace gqfn::testing {

/// Superoperator matrix of a map, column by column on matrix units.
inline SuperOperator tabulate(const HilbertSpec& sp, const std::function<Operator(const Operator&)>& f) {
  const Index n = sp.total_dim();
  Matrix m(n * n, n * n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) {
      Matrix e = Matrix::Zero(n, n);
      e(r, c) = 1.0;
      m.col(c * n + r) = vec(f(Operator(sp, e)).matrix());
    }
  }
  return {sp, m};
}

/// Induced norm of a superoperator on the Hilbert–Schmidt space.
inline double superop_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline double superop_error(const SuperOperator& a, const SuperOperator& b) {
  return superop_norm(a.matrix() - b.matrix());
}

/// K − ½n_ji L_i*L_j − ½n_ij L_iL_j* + ½m_ij L_i*L_j* + ½m_ji* L_iL_j
inline Operator k_form(const Couplings& l, const Operator& h, const GaussianNoiseSpec& s) {
  const HilbertSpec& sp = h.space();
  Operator k = -kI * h;
  for (const auto& li : l) k -= 0.5 * (li.adjoint() * li);
  const Index d = s.channels();
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      const Operator &li = l[i], &lj = l[j];
      k = k - (0.5 * s.n(j, i)) * (li.adjoint() * lj) - (0.5 * s.n(i, j)) * (li * lj.adjoint()) +
          (0.5 * s.m(i, j)) * (li.adjoint() * lj.adjoint()) + (0.5 * std::conj(s.m(j, i))) * (li * lj);
    }
  }
  (void)sp;
  return k;
}

/// Vacuum ℒX = ½Σ L_k*[X,L_k] + ½[L_k*,X]L_k − i[X,H], written out.
inline Operator vacuum_lind_apply(const Couplings& l, const Operator& h, const Operator& x) {
  Operator out = -kI * commutator(x, h);
  for (const auto& lk : l) {
    out += 0.5 * (lk.adjoint() * commutator(x, lk)) + 0.5 * (commutator(lk.adjoint(), x) * lk);
  }
  return out;
}

/// Double-commutator form of the Gaussian Lindbladian.
inline SuperOperator lind_form(const Couplings& l, const Operator& h, const GaussianNoiseSpec& s) {
  const Index d = s.channels();
  return tabulate(h.space(), [&](const Operator& x) {
    Operator out = vacuum_lind_apply(l, h, x);
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) {
        const Operator li = l[i], lj = l[j];
        out += (0.5 * s.n(j, i)) *
               (commutator(li.adjoint(), commutator(x, lj)) + commutator(commutator(li.adjoint(), x), lj));
        out += (0.5 * s.m(i, j)) * commutator(lj.adjoint(), commutator(li.adjoint(), x));
        out += (0.5 * std::conj(s.m(i, j))) * commutator(commutator(x, li), lj);
      }
    }
    return out;
  });
}

/// Heisenberg drift built from the Evans–Hudson maps of a static-S model:
/// ℒ₀₀ plus the Itō corrections of dB*∘ℒ_j0 and ℒ_0k∘dB under the table T.
inline SuperOperator evans_hudson_drift(const SlhModel& g, const GaussianNoiseSpec& s) {
  const Index d = g.channels();
  const ItoTable t = ItoTable::from_noise(s);
  std::vector<Matrix> up, down;
  for (Index j = 0; j < d; ++j) {
    up.push_back(evans_hudson(g, j + 1, 0).matrix());
    down.push_back(evans_hudson(g, 0, j + 1).matrix());
  }
  Matrix m = evans_hudson(g, 0, 0).matrix();
  for (Index k = 0; k < d; ++k) {
    for (Index j = 0; j < d; ++j) {
      m += 0.5 * t(d + k, d + j) * (up[j] * up[k]);
      m += 0.5 * t(d + k, j) * (down[j] * up[k]);
      m += 0.5 * t(d + j, k) * (up[j] * down[k]);
      m += 0.5 * t(j, k) * (down[j] * down[k]);
    }
  }
  return {g.space(), m};
}

/// Itō coefficients of dU = −i dE ∘ U by fixed-point iteration (small E).
struct CayleyIterate {
  Matrix s, l, k;
};

inline CayleyIterate iterate_cayley(const StratonovichGenerator& e, int iterations = 400) {
  const Index big = e.e_ll.rows();
  Matrix x = Matrix::Zero(big, e.e_col.cols());
  Matrix y = Matrix::Zero(big, big);
  for (int it = 0; it < iterations; ++it) {
    x = -kI * e.e_col - 0.5 * kI * e.e_ll * x;
    y = -kI * e.e_ll - 0.5 * kI * e.e_ll * y;
  }
  return {Matrix::Identity(big, big) + y, x, -kI * e.e_00 - 0.5 * kI * e.e_col.adjoint() * x};
}

}  // namespace gqfn::testing
