// generators.hpp: Itō-form generators for vacuum and Gaussian inputs, with the
// conversion from the Wick-ordered Stratonovich form.

#pragma once

#include <vector>

#include "gqfn/gaussian.hpp"
#include "gqfn/slh.hpp"
#include "gqfn/superop.hpp"

namespace gqfn {

using Couplings = std::vector<Operator>;

inline constexpr double kHermitianTol = 1e-10;

namespace detail {

inline void require_hamiltonian(const Couplings& l, const Operator& h) {
  for (const auto& lk : l) h.check_same(lk, "generator");
  if (h.hermiticity_residual() > kHermitianTol * std::max(1.0, h.matrix().cwiseAbs().maxCoeff())) {
    throw DomainError("generator: H is not self-adjoint");
  }
}

inline void require_noise(const Couplings& l, const GaussianNoiseSpec& spec) {
  if (spec.channels() != static_cast<Index>(l.size())) {
    throw DomainError("generator: noise channel count differs from coupling count");
  }
  const NoiseReport rep = validate_noise(spec, 1e-9);
  if (!rep.valid()) throw ValidationError("generator: invalid noise (" + rep.failures().front().name + ")");
}

/// Couplings a static-S model presents to its input field: S*L.
inline Couplings effective_couplings(const SlhModel& g) {
  if (is_static(g)) return rotate_out_scattering(g).l_column();
  throw DomainError("Gaussian generators need a static scattering matrix");
}

}  // namespace detail

/// K = −½ L_k*L_k − iH
inline Operator vacuum_k(const Couplings& l, const Operator& h) {
  detail::require_hamiltonian(l, h);
  Operator k = -kI * h;
  for (const auto& lk : l) k -= 0.5 * (lk.adjoint() * lk);
  return k;
}

/// ℒX = Σ_k L_k* X L_k − ½{L_k*L_k, X} − i[X, H]
inline SandwichSum vacuum_lindblad_terms(const Couplings& l, const Operator& h) {
  detail::require_hamiltonian(l, h);
  SandwichSum s(h.space());
  for (const auto& lk : l) s.add_dissipator(1.0, lk.adjoint(), lk);
  s.add_hamiltonian(h);
  return s;
}

inline SuperOperator vacuum_lindblad(const Couplings& l, const Operator& h) {
  return vacuum_lindblad_terms(l, h).to_superoperator();
}

/// ℒ₀₀ of the model; independent of S.
inline SuperOperator vacuum_lindblad(const SlhModel& g) { return vacuum_lindblad(g.l_column(), g.h()); }

/// ℒ_αβ with α, β ∈ {0, 1..d}; channel j is index j.
inline SuperOperator evans_hudson(const SlhModel& g, Index alpha, Index beta) {
  const Index d = g.channels();
  if (alpha < 0 || alpha > d || beta < 0 || beta > d) throw DomainError("evans_hudson: index out of range");
  if (alpha == 0 && beta == 0) return vacuum_lindblad(g);
  SandwichSum s(g.space());
  if (alpha > 0 && beta > 0) {
    const Index j = alpha - 1, k = beta - 1;
    for (Index l = 0; l < d; ++l) s.add_sandwich(1.0, g.s(l, j).adjoint(), g.s(l, k));
    if (j == k) s.add_left(-1.0, Operator::identity(g.space()));
  } else if (alpha > 0) {
    // S_lj*[X, L_l]
    const Index j = alpha - 1;
    for (Index l = 0; l < d; ++l) {
      const Operator sj = g.s(l, j).adjoint();
      s.add_sandwich(1.0, sj, g.l(l));
      s.add_left(-1.0, sj * g.l(l));
    }
  } else {
    // [L_l*, X] S_lk
    const Index k = beta - 1;
    for (Index l = 0; l < d; ++l) {
      const Operator sk = g.s(l, k);
      s.add_sandwich(1.0, g.l(l).adjoint(), sk);
      s.add_right(-1.0, g.l(l).adjoint() * sk);
    }
  }
  return s.to_superoperator();
}

/// K^(N,M) = −½(δ_ij+n_ji)L_i*L_j − ½n_ij L_iL_j* + ½m_ij L_i*L_j* + ½m_ji* L_iL_j − iH
inline Operator gaussian_k(const Couplings& l, const Operator& h, const GaussianNoiseSpec& spec) {
  detail::require_hamiltonian(l, h);
  detail::require_noise(l, spec);
  const Index d = spec.channels();
  Operator k = -kI * h;
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      const cplx c1 = (i == j ? 1.0 : 0.0) + spec.n(j, i);
      k -= (0.5 * c1) * (l[i].adjoint() * l[j]);
      k -= (0.5 * spec.n(i, j)) * (l[i] * l[j].adjoint());
      k += (0.5 * spec.m(i, j)) * (l[i].adjoint() * l[j].adjoint());
      k += (0.5 * std::conj(spec.m(j, i))) * (l[i] * l[j]);
    }
  }
  return k;
}

inline SandwichSum gaussian_lindblad_terms(const Couplings& l, const Operator& h, const GaussianNoiseSpec& spec) {
  detail::require_hamiltonian(l, h);
  detail::require_noise(l, spec);
  const Index d = spec.channels();
  SandwichSum s(h.space());
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      const Operator li = l[i], lj = l[j];
      s.add_dissipator((i == j ? 1.0 : 0.0) + spec.n(j, i), li.adjoint(), lj);
      s.add_dissipator(spec.n(i, j), li, lj.adjoint());
      s.add_dissipator(-spec.m(i, j), li.adjoint(), lj.adjoint());
      s.add_dissipator(-std::conj(spec.m(j, i)), li, lj);
    }
  }
  s.add_hamiltonian(h);
  return s;
}

inline SuperOperator gaussian_lindblad(const Couplings& l, const Operator& h, const GaussianNoiseSpec& spec) {
  return gaussian_lindblad_terms(l, h, spec).to_superoperator();
}

/// Static-S model: the field sees the rotated couplings S*L.
inline SuperOperator gaussian_lindblad(const SlhModel& g, const GaussianNoiseSpec& spec) {
  return gaussian_lindblad(detail::effective_couplings(g), g.h(), spec);
}

inline Operator gaussian_k(const SlhModel& g, const GaussianNoiseSpec& spec) {
  return gaussian_k(detail::effective_couplings(g), g.h(), spec);
}

/// Itō correction for a Wick-ordered unitary QSDE
///   dU = K dt U + dB_k* ∘ L_k U − L_k* U ∘ dB_k.
/// Left terms dZ_α ∘ C U gain ½ C T(α,β) F_β, right terms C U ∘ dZ_α gain
/// ½ C F_β T(β,α), where dU = F_β dZ_β U.
inline Operator ito_correct_unitary(const Operator& k, const Couplings& l, const ItoTable& t) {
  const Index d = static_cast<Index>(l.size());
  if (t.channels() != d) throw DomainError("ito_correct_unitary: table size differs from coupling count");
  std::vector<Operator> f;  // index β: 0..d-1 ↔ dB_j (−L_j*), d..2d-1 ↔ dB_j* (L_j)
  for (Index j = 0; j < d; ++j) f.push_back(-l[j].adjoint());
  for (Index j = 0; j < d; ++j) f.push_back(l[j]);
  Operator out = k;
  for (Index kk = 0; kk < d; ++kk) {
    const Index left = d + kk;  // dB_k* ∘ L_k U
    const Index right = kk;     // −L_k* U ∘ dB_k
    for (Index b = 0; b < 2 * d; ++b) {
      out += (0.5 * t(left, b)) * (l[kk] * f[b]);
      out += (0.5 * t(b, right)) * (-l[kk].adjoint() * f[b]);
    }
  }
  return out;
}

/// Itō correction for the Wick-ordered Heisenberg QSDE
///   dj(X) = dB_k* ∘ j([X, L_k]) + j([L_k*, X]) ∘ dB_k + j(𝒟X) dt.
inline SuperOperator ito_correct_heisenberg(const SuperOperator& drift, const Couplings& l, const ItoTable& t) {
  const Index d = static_cast<Index>(l.size());
  if (t.channels() != d) throw DomainError("ito_correct_heisenberg: table size differs from coupling count");
  std::vector<Matrix> np, nm;  // 𝒩⁺_j X = [X, L_j], 𝒩⁻_j X = [L_j*, X]
  for (Index j = 0; j < d; ++j) {
    np.push_back(commutator_right(l[j]).matrix());
    nm.push_back(commutator_left(l[j].adjoint()).matrix());
  }
  Matrix m = drift.matrix();
  for (Index k = 0; k < d; ++k) {
    for (Index j = 0; j < d; ++j) {
      m += 0.5 * t(d + k, d + j) * (np[j] * np[k]);
      m += 0.5 * t(d + k, j) * (nm[j] * np[k]);
      m += 0.5 * t(d + j, k) * (np[j] * nm[k]);
      m += 0.5 * t(j, k) * (nm[j] * nm[k]);
    }
  }
  return SuperOperator(drift.space(), std::move(m));
}

struct ItoGenerators {
  Operator k;
  SuperOperator lindblad;
};

/// Representation-free coefficients (vacuum K and ℒ) converted to Itō form
/// for the given field state.
inline ItoGenerators strat_to_ito(const Couplings& l, const Operator& h, const GaussianNoiseSpec& spec) {
  detail::require_noise(l, spec);
  const ItoTable t = ItoTable::from_noise(spec);
  return {ito_correct_unitary(vacuum_k(l, h), l, t), ito_correct_heisenberg(vacuum_lindblad(l, h), l, t)};
}

/// ℒX + ½n[[L*, X], L] + ½n[L*, [X, L]]
inline SuperOperator approx_heisenberg_drift(const Operator& l, const Operator& h, double n) {
  const SuperOperator base = vacuum_lindblad(Couplings{l}, h);
  const SuperOperator a = commutator_right(l).compose(commutator_left(l.adjoint()));
  const SuperOperator b = commutator_left(l.adjoint()).compose(commutator_right(l));
  return base + cplx(0.5 * n) * (a + b);
}

/// Frobenius distance between the thermal Wick-form drift and gaussian_lindblad(N=[n]).
inline double thermal_heisenberg_check(const SlhModel& g, double n) {
  if (g.channels() != 1) throw DomainError("thermal_heisenberg_check: single-channel model required");
  if (!is_static(g)) throw DomainError("thermal_heisenberg_check: scattering matrix is not static");
  if (n < 0) throw DomainError("thermal_heisenberg_check: n must be >= 0");
  const SuperOperator lhs = approx_heisenberg_drift(g.l(0), g.h(), n);
  const SuperOperator rhs = gaussian_lindblad(g, GaussianNoiseSpec::thermal(n));
  return superop_distance(lhs, rhs);
}

/// Drift of gb ◁ ga assembled from the open-loop equations under the
/// constraint dB^(B) = S_A dB_in + L_A dt, then converted to Itō form.
/// Static scattering is rotated into the couplings first.
inline SuperOperator series_drift_assembled(const SlhModel& ga, const SlhModel& gb, const GaussianNoiseSpec& spec) {
  if (!is_static(ga) || !is_static(gb)) throw DomainError("series_drift_assembled: static scattering required");
  const Index d = ga.channels();
  const SlhModel ra = rotate_out_scattering(ga);
  const SlhModel rb = rotate_out_scattering(gb);
  const Matrix sa = *scalar_scattering(ga.s_big(), d);
  const Couplings la = ra.l_column();  // S_A* L_A
  const Couplings lb = rb.l_column();  // S_B* L_B
  const Couplings la_raw = ga.l_column();
  const HilbertSpec& space = ga.space();

  // Noise seen by B in terms of dB_in: dB^(B)_k = Σ_j (S_A)_kj dB_in,j + L_A,k dt.
  Couplings lb_in(d, Operator::zero(space));
  for (Index j = 0; j < d; ++j) {
    for (Index k = 0; k < d; ++k) lb_in[j] += std::conj(sa(k, j)) * lb[k];
  }

  SuperOperator drift = vacuum_lindblad(la, ra.h()) + vacuum_lindblad(lb, rb.h());
  for (Index k = 0; k < d; ++k) {
    // L_A,k* [X, L_B,k] + [L_B,k*, X] L_A,k
    drift += left_multiply(la_raw[k].adjoint()).compose(commutator_right(lb[k]));
    drift += right_multiply(la_raw[k]).compose(commutator_left(lb[k].adjoint()));
  }

  // Noise coefficients on dB_in are additive superoperators; convert with
  // the engine on the summed couplings, which enter only via commutators.
  Couplings total(d, Operator::zero(space));
  for (Index j = 0; j < d; ++j) total[j] = la[j] + lb_in[j];
  detail::require_noise(total, spec);
  return ito_correct_heisenberg(drift, total, ItoTable::from_noise(spec));
}

}  // namespace gqfn
