// gaussian.hpp: flat-spectrum Gaussian field states described by their second
// moments (N, M), and the Bogoliubov maps acting on them.

#pragma once

#include <string>
#include <vector>

#include "gqfn/operator.hpp"

namespace gqfn {

/// Field second moments n_ij = <b_i* b_j>, m_ij = <b_i b_j> per unit time.
struct GaussianNoiseSpec {
  Matrix n;
  Matrix m;

  GaussianNoiseSpec() : GaussianNoiseSpec(Matrix::Zero(1, 1), Matrix::Zero(1, 1)) {}

  GaussianNoiseSpec(Matrix n_mat, Matrix m_mat) : n(std::move(n_mat)), m(std::move(m_mat)) {
    if (n.rows() != n.cols() || m.rows() != m.cols() || n.rows() != m.rows() || n.rows() < 1) {
      throw DomainError("GaussianNoiseSpec: N and M must be square of equal size");
    }
  }

  static GaussianNoiseSpec vacuum(Index d) {
    return {Matrix::Zero(d, d), Matrix::Zero(d, d)};
  }
  static GaussianNoiseSpec thermal(double nbar, Index d = 1) {
    if (nbar < 0) throw DomainError("thermal noise: n must be >= 0");
    return {nbar * Matrix::Identity(d, d), Matrix::Zero(d, d)};
  }
  static GaussianNoiseSpec single(double nbar, cplx mval) {
    Matrix nm(1, 1), mm(1, 1);
    nm(0, 0) = nbar;
    mm(0, 0) = mval;
    return {nm, mm};
  }

  Index channels() const { return n.rows(); }
  bool is_vacuum(double tol = 0.0) const {
    return n.cwiseAbs().maxCoeff() <= tol && m.cwiseAbs().maxCoeff() <= tol;
  }
};

struct NoiseCheck {
  std::string name;
  bool passed;
  double residual;
};

struct NoiseReport {
  std::vector<NoiseCheck> checks;

  bool valid() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
  bool passed(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return c.passed;
    }
    throw DomainError("NoiseReport: no check named " + name);
  }
  std::vector<NoiseCheck> failures() const {
    std::vector<NoiseCheck> out;
    for (const auto& c : checks) {
      if (!c.passed) out.push_back(c);
    }
    return out;
  }
};

/// F = [[I + Nᵀ, M], [M*, N]]
inline Matrix covariance(const GaussianNoiseSpec& s) {
  const Index d = s.channels();
  Matrix f(2 * d, 2 * d);
  f.topLeftCorner(d, d) = Matrix::Identity(d, d) + s.n.transpose();
  f.topRightCorner(d, d) = s.m;
  f.bottomLeftCorner(d, d) = s.m.adjoint();
  f.bottomRightCorner(d, d) = s.n;
  return f;
}

/// Positivity of F, split into its Schur-complement pieces so failures are named.
inline NoiseReport validate_noise(const GaussianNoiseSpec& s, double tol) {
  const Index d = s.channels();
  NoiseReport r;

  const PsdReport npsd = is_psd(s.n, tol);
  r.checks.push_back({"n_hermitian_psd", npsd.psd,
                      std::max(npsd.hermiticity_residual, std::max(0.0, -npsd.min_eigenvalue))});

  const double msym = max_abs_diff(s.m, s.m.transpose());
  r.checks.push_back({"m_symmetric", msym <= tol, msym});

  const PsdReport fpsd = is_psd(covariance(s), tol);
  r.checks.push_back({"covariance_psd", fpsd.psd, std::max(0.0, -fpsd.min_eigenvalue)});

  // ran(M*) ⊆ ran(N), via ‖(I − P_N) M*‖
  const Matrix nh = 0.5 * (s.n + s.n.adjoint());
  const Matrix p = range_projector(nh);
  const Matrix leak = (Matrix::Identity(d, d) - p) * s.m.adjoint();
  const double range_res = leak.size() ? leak.cwiseAbs().maxCoeff() : 0.0;
  r.checks.push_back({"range_condition", range_res <= tol, range_res});

  // I + Nᵀ − M N⁻ M* ≥ 0
  const Matrix schur =
      Matrix::Identity(d, d) + s.n.transpose() - s.m * pinv(nh) * s.m.adjoint();
  const PsdReport spsd = is_psd(0.5 * (schur + schur.adjoint()), tol);
  r.checks.push_back({"schur_condition", spsd.psd, std::max(0.0, -spsd.min_eigenvalue)});
  return r;
}

/// ã = U a + V a#
struct BogoliubovMap {
  Matrix u;
  Matrix v;

  BogoliubovMap(Matrix u_mat, Matrix v_mat) : u(std::move(u_mat)), v(std::move(v_mat)) {
    if (u.rows() != u.cols() || v.rows() != v.cols() || u.rows() != v.rows()) {
      throw DomainError("BogoliubovMap: U and V must be square of equal size");
    }
  }

  Index modes() const { return u.rows(); }

  /// W = [[U, V], [V#, U#]]
  Matrix w() const {
    const Index n = modes();
    Matrix out(2 * n, 2 * n);
    out << u, v, v.conjugate(), u.conjugate();
    return out;
  }

  /// W⁻¹ = [[U*, −Vᵀ], [−V*, Uᵀ]], valid when check() holds.
  Matrix w_inverse() const {
    const Index n = modes();
    Matrix out(2 * n, 2 * n);
    out << u.adjoint(), -v.transpose(), -v.adjoint(), u.transpose();
    return out;
  }
};

/// UU* − VV* = I and UVᵀ = VUᵀ within tol.
inline bool bogoliubov_check(const BogoliubovMap& b, double tol) {
  const Index n = b.modes();
  const double ccr = max_abs_diff(b.u * b.u.adjoint() - b.v * b.v.adjoint(), Matrix::Identity(n, n));
  const double sym = max_abs_diff(b.u * b.v.transpose(), b.v * b.u.transpose());
  return ccr <= tol && sym <= tol;
}

/// F̃ = W F W†
inline Matrix transform_covariance(const BogoliubovMap& b, const Matrix& f) {
  if (f.rows() != 2 * b.modes() || f.cols() != 2 * b.modes()) {
    throw DomainError("transform_covariance: covariance has wrong size");
  }
  const Matrix w = b.w();
  return w * f * w.adjoint();
}

/// Reads (N, M) back out of a covariance matrix; top-left d×d block of modes.
inline GaussianNoiseSpec noise_from_covariance(const Matrix& f, Index d = -1) {
  if (f.rows() != f.cols() || f.rows() % 2 != 0) {
    throw DomainError("noise_from_covariance: covariance must be 2D x 2D");
  }
  const Index big = f.rows() / 2;
  if (d < 0) d = big;
  if (d > big) throw DomainError("noise_from_covariance: too many modes requested");
  return {f.block(big, big, d, d), f.block(0, big, d, d)};
}

/// True when F̃ = W F W† again has the CCR block form (F̃₁₁ − F̃₂₂ᵀ = I, F̃₁₂ symmetric).
inline bool preserves_covariance_structure(const BogoliubovMap& b, const Matrix& f, double tol) {
  const Index n = b.modes();
  const Matrix ft = transform_covariance(b, f);
  const Matrix f11 = ft.topLeftCorner(n, n);
  const Matrix f12 = ft.topRightCorner(n, n);
  const Matrix f22 = ft.bottomRightCorner(n, n);
  return max_abs_diff(f11 - f22.transpose(), Matrix::Identity(n, n)) <= tol &&
         max_abs_diff(f12, f12.transpose()) <= tol;
}

/// Closed-form blocks of W F W† for a general input state.
inline GaussianNoiseSpec transformed_moments(const BogoliubovMap& b, const GaussianNoiseSpec& s) {
  const Matrix& u = b.u;
  const Matrix& v = b.v;
  const Matrix& n = s.n;
  const Matrix& m = s.m;
  Matrix np = v.conjugate() * v.transpose() + v.conjugate() * n.transpose() * v.transpose() +
              u.conjugate() * m.adjoint() * v.transpose() + v.conjugate() * m * u.transpose() +
              u.conjugate() * n * u.transpose();
  Matrix mp = u * v.transpose() + u * n.transpose() * v.transpose() + v * m.adjoint() * v.transpose() +
              u * m * u.transpose() + v * n * u.transpose();
  return {np, mp};
}

/// N = V#Vᵀ, M = UVᵀ for a map applied to vacuum.
inline GaussianNoiseSpec vacuum_moments(const BogoliubovMap& b) {
  return {b.v.conjugate() * b.v.transpose(), b.u * b.v.transpose()};
}

/// Two-channel map with B = √(n+1)A₊ + √n A₋* on channel 0.
inline BogoliubovMap thermal_doubling(double n) {
  if (n < 0) throw DomainError("thermal_doubling: n must be >= 0");
  const double a = std::sqrt(n + 1.0);
  const double b = std::sqrt(n);
  Matrix u = a * Matrix::Identity(2, 2);
  Matrix v = Matrix::Zero(2, 2);
  v(0, 1) = b;
  v(1, 0) = b;
  return {u, v};
}

/// ã = a1·a₁ + a2_dag·a₂* + a2·a₂; single-mode form uses only a₁.
struct SingleModeDilation {
  bool single_mode = false;
  cplx a1{1.0, 0.0};
  cplx a2_dag{0.0, 0.0};
  cplx a2{0.0, 0.0};

  /// 1×D rows (U, V) of the map acting on the vacuum modes.
  Matrix u_row() const {
    Matrix r(1, single_mode ? 1 : 2);
    if (single_mode) {
      r(0, 0) = a1;
    } else {
      r(0, 0) = a1;
      r(0, 1) = a2;
    }
    return r;
  }
  Matrix v_row() const {
    Matrix r(1, single_mode ? 1 : 2);
    if (single_mode) {
      r(0, 0) = a2_dag;
    } else {
      r(0, 0) = 0.0;
      r(0, 1) = a2_dag;
    }
    return r;
  }
  /// (N, M) of ã on the vacuum.
  GaussianNoiseSpec induced() const {
    const Matrix u = u_row();
    const Matrix v = v_row();
    return {v.conjugate() * v.transpose(), u * v.transpose()};
  }
  /// [ã, ã*] = |u|² − |v|²
  double commutator() const { return u_row().squaredNorm() - v_row().squaredNorm(); }
};

inline SingleModeDilation dilate_single_mode(double n, cplx m, double tol = 1e-12) {
  if (n < 0) throw DomainError("dilate_single_mode: n must be >= 0");
  const double m2 = std::norm(m);
  const double bound = n * (n + 1.0);
  if (n == 0.0) {
    if (std::abs(m) > 0.0) throw ValidationError("dilate_single_mode: m != 0 requires n > 0");
    return SingleModeDilation{};
  }
  if (m2 > bound * (1.0 + tol) + tol) {
    throw ValidationError("dilate_single_mode: schur_condition violated, |m|^2 > n(n+1)");
  }
  SingleModeDilation d;
  if (std::abs(m2 - bound) <= tol * std::max(1.0, bound)) {
    d.single_mode = true;
    d.a1 = std::sqrt(n + 1.0);
    d.a2_dag = std::polar(std::sqrt(n), std::arg(m));
    return d;
  }
  d.a1 = std::sqrt(std::max(0.0, n + 1.0 - m2 / n));
  d.a2_dag = std::sqrt(n);
  d.a2 = m / std::sqrt(n);
  return d;
}

/// Itō products dZ_α dZ_β = T(α,β) dt with α = k ↔ dB_k, α = d+k ↔ dB_k*.
class ItoTable {
 public:
  explicit ItoTable(Matrix t) : t_(std::move(t)) {
    if (t_.rows() != t_.cols() || t_.rows() % 2 != 0) throw DomainError("ItoTable: must be 2d x 2d");
  }

  static ItoTable from_noise(const GaussianNoiseSpec& s) {
    const Index d = s.channels();
    Matrix t(2 * d, 2 * d);
    // dB_i dB_j = m_ij, dB_i dB_j* = δ_ij + n_ji, dB_i* dB_j = n_ij, dB_i* dB_j* = m_ji*
    t.topLeftCorner(d, d) = s.m;
    t.topRightCorner(d, d) = Matrix::Identity(d, d) + s.n.transpose();
    t.bottomLeftCorner(d, d) = s.n;
    t.bottomRightCorner(d, d) = s.m.adjoint();
    return ItoTable(std::move(t));
  }
  static ItoTable vacuum(Index d) { return from_noise(GaussianNoiseSpec::vacuum(d)); }

  /// Table of ã = U a + V a# driven by vacuum: T = W T_vac Wᵀ.
  static ItoTable from_bogoliubov(const BogoliubovMap& b) {
    const Matrix w = b.w();
    return ItoTable(w * vacuum(b.modes()).matrix() * w.transpose());
  }

  Index channels() const { return t_.rows() / 2; }
  const Matrix& matrix() const { return t_; }

  cplx operator()(Index a, Index b) const { return t_(a, b); }
  cplx db_db(Index i, Index j) const { return t_(i, j); }
  cplx db_dbdag(Index i, Index j) const { return t_(i, channels() + j); }
  cplx dbdag_db(Index i, Index j) const { return t_(channels() + i, j); }
  cplx dbdag_dbdag(Index i, Index j) const { return t_(channels() + i, channels() + j); }

  /// Restriction to the listed channels.
  ItoTable sub(const std::vector<Index>& keep) const {
    const Index d = channels();
    const Index k = static_cast<Index>(keep.size());
    Matrix t(2 * k, 2 * k);
    for (Index a = 0; a < 2 * k; ++a) {
      for (Index b = 0; b < 2 * k; ++b) {
        const Index ra = (a < k ? 0 : d) + keep[a % k];
        const Index rb = (b < k ? 0 : d) + keep[b % k];
        t(a, b) = t_(ra, rb);
      }
    }
    return ItoTable(std::move(t));
  }

  GaussianNoiseSpec to_noise() const {
    const Index d = channels();
    return {t_.bottomLeftCorner(d, d), t_.topLeftCorner(d, d)};
  }

 private:
  Matrix t_;
};

}  // namespace gqfn
