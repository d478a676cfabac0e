// dpa.hpp: the degenerate parametric amplifier used as a thermal-noise source,
// plus the convergence experiment against the thermal master equation.
//
// Modes c₊, c₋ obey ċ₊ = −kκc₊ + kεc₋* − √(2κk)a₊ (and ± swapped). The drift
// matrix has eigenvalues k(−κ ± ε): ε < κ is the stable, below-threshold
// regime. n = (2εκ/(ε²−κ²))² is invariant under ε ↦ κ²/ε, so every n > 0 has
// a stable realization.

#pragma once

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "gqfn/dynamics.hpp"
#include "gqfn/generators.hpp"

namespace gqfn {

struct DpaParams {
  double eps = 0.0;
  double kappa = 1.0;
  double k = 1.0;
  std::size_t truncation = 8;

  /// ε, κ > 0, ε ≠ κ (pole), k ≥ 0, truncation ≥ 2.
  void validate() const {
    if (!(eps > 0) || !(kappa > 0)) throw DomainError("DpaParams: eps and kappa must be > 0");
    if (std::abs(eps - kappa) < 1e-6 * kappa) throw DomainError("DpaParams: eps = kappa is a pole of the transfer functions");
    if (!(k >= 0)) throw DomainError("DpaParams: k must be >= 0");
    if (truncation < 2) throw DomainError("DpaParams: truncation must be >= 2");
  }

  bool is_below_threshold() const { return eps < kappa; }

  /// Same n with the stable pump ε' = κ²/ε.
  DpaParams stable_mirror() const {
    DpaParams p = *this;
    if (!is_below_threshold()) p.eps = kappa * kappa / eps;
    return p;
  }
};

inline double thermal_n(double eps, double kappa) {
  DpaParams{eps, kappa, 1.0, 2}.validate();
  const double r = 2.0 * eps * kappa / (eps * eps - kappa * kappa);
  return r * r;
}

struct StaticCoefficients {
  double direct;  // (ε²+κ²)/(ε²−κ²)
  double cross;   // 2εκ/(ε²−κ²)
};

inline StaticCoefficients static_limit(double eps, double kappa) {
  DpaParams{eps, kappa, 1.0, 2}.validate();
  const double den = eps * eps - kappa * kappa;
  return {(eps * eps + kappa * kappa) / den, 2.0 * eps * kappa / den};
}

inline cplx dpa_denominator(double eps, double kappa, cplx s) {
  return s * s + 2.0 * s * kappa + kappa * kappa - eps * eps;
}

inline cplx transfer_u(double eps, double kappa, cplx s) {
  const cplx den = dpa_denominator(eps, kappa, s);
  if (std::abs(den) < 1e-14) throw DomainError("transfer: evaluation at a pole");
  return (s * s - kappa * kappa - eps * eps) / den;
}

inline cplx transfer_v(double eps, double kappa, cplx s) {
  const cplx den = dpa_denominator(eps, kappa, s);
  if (std::abs(den) < 1e-14) throw DomainError("transfer: evaluation at a pole");
  return 2.0 * kappa * eps / den;
}

/// b = Ξ₋ a + Ξ₊ a#, with a = (a₊, a₋).
struct TransferPair {
  Matrix xi_minus;
  Matrix xi_plus;
};

/// Ξ₋ = diag(u(s/k)); Ξ₊ is antidiagonal with −v(s/k), the sign the state-space
/// model produces, so that k → ∞ gives the positive static coefficients.
inline TransferPair transfer(const DpaParams& p, cplx s) {
  p.validate();
  if (p.k <= 0) throw DomainError("transfer: k must be > 0");
  const cplx sk = s / p.k;
  const cplx u = transfer_u(p.eps, p.kappa, sk);
  const cplx v = transfer_v(p.eps, p.kappa, sk);
  TransferPair t{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  t.xi_minus(0, 0) = u;
  t.xi_minus(1, 1) = u;
  t.xi_plus(0, 1) = -v;
  t.xi_plus(1, 0) = -v;
  return t;
}

/// Transfer matrix computed directly from the linear drift (sI − A)⁻¹, as a
/// check on the closed forms. Returns (Ξ₋, Ξ₊) at s.
inline TransferPair transfer_state_space(const DpaParams& p, cplx s) {
  p.validate();
  // state x = (c₊, c₋, c₊*, c₋*), input w = (a₊, a₋, a₊*, a₋*)
  const double k = p.k;
  Matrix a = Matrix::Zero(4, 4);
  a(0, 0) = a(1, 1) = a(2, 2) = a(3, 3) = -k * p.kappa;
  a(0, 3) = a(1, 2) = a(2, 1) = a(3, 0) = k * p.eps;
  const double g = std::sqrt(2.0 * p.kappa * k);
  const Matrix b = -g * Matrix::Identity(4, 4);
  const Matrix c = g * Matrix::Identity(4, 4);
  const Matrix d = Matrix::Identity(4, 4);
  const Matrix tf = d + c * (s * Matrix::Identity(4, 4) - a).inverse() * b;
  return {tf.block(0, 0, 2, 2), tf.block(0, 2, 2, 2)};
}

/// Where the two DPA modes sit in a joint space.
struct DpaLayout {
  HilbertSpec space;
  std::size_t plus;
  std::size_t minus;
};

/// system ⊗ c₊ ⊗ c₋
inline DpaLayout dpa_layout(const HilbertSpec& system, std::size_t truncation) {
  const HilbertSpec modes({truncation, truncation});
  return {system.tensor(modes), system.factors(), system.factors() + 1};
}

/// (I, [√(2κk)c₊; √(2κk)c₋], (εk/i)(c₊c₋ − c₊*c₋*)).
inline SlhModel build_dpa(const DpaParams& p, const HilbertSpec& space, std::size_t plus, std::size_t minus) {
  p.validate();
  if (plus == minus) throw DomainError("build_dpa: c+ and c- need distinct factors");
  if (space.dim(plus) != p.truncation || space.dim(minus) != p.truncation) {
    throw DomainError("build_dpa: mode factors do not have the requested truncation");
  }
  const Operator cp = annihilator(space, plus);
  const Operator cm = annihilator(space, minus);
  const double g = std::sqrt(2.0 * p.kappa * p.k);
  Operator h = (p.eps * p.k / kI) * (cp * cm - cp.adjoint() * cm.adjoint());
  return SlhModel::from_couplings({g * cp, g * cm}, h);
}

/// (G ⊞ (1,0,0)) ◁ G_DPA. `g` is a one-channel model already on the joint space.
inline SlhModel cascade(const SlhModel& g, const DpaParams& p, std::size_t plus, std::size_t minus) {
  if (g.channels() != 1) throw DomainError("cascade: system must have one channel");
  if (!is_static(g)) throw DomainError("cascade: system scattering must be static");
  const SlhModel dpa = build_dpa(p, g.space(), plus, minus);
  return series(concat(g, SlhModel::trivial(g.space(), 1)), dpa);
}

/// Closed-form cascade: ([S,0;0,1], [L + S√(2κk)c₊; √(2κk)c₋],
/// H + H_amp + (√(κk)/(√2 i))(L*Sc₊ − c₊*S*L)).
inline SlhModel cascade_closed_form(const SlhModel& g, const DpaParams& p, std::size_t plus, std::size_t minus) {
  if (!is_static(g)) throw DomainError("cascade_closed_form: static scattering required");
  const HilbertSpec& space = g.space();
  const cplx s = (*scalar_scattering(g.s_big(), 1))(0, 0);
  const Operator cp = annihilator(space, plus);
  const Operator cm = annihilator(space, minus);
  const Operator l = g.l(0);
  const double gk = std::sqrt(2.0 * p.kappa * p.k);
  const Operator h_amp = (p.eps * p.k / kI) * (cp * cm - cp.adjoint() * cm.adjoint());
  const Operator cross = (std::sqrt(p.kappa * p.k) / (std::sqrt(2.0) * kI)) *
                         (s * (l.adjoint() * cp) - std::conj(s) * (cp.adjoint() * l));
  Matrix sm = Matrix::Identity(2, 2);
  sm(0, 0) = s;
  return SlhModel::from_scalar_s(sm, {l + (s * gk) * cp, gk * cm}, g.h() + h_amp + cross);
}

/// Adiabatic elimination: setting ċ± = 0 and solving for √k c₊ in terms of
/// (a₊, a₋*). Returns the two coefficients.
inline std::pair<double, double> adiabatic_coefficients(double eps, double kappa) {
  DpaParams{eps, kappa, 1.0, 2}.validate();
  // [−κ ε; ε −κ] (c₊, c₋*)ᵀ = √(2κ/k) (a₊, a₋*)ᵀ, scaled by √k
  Eigen::Matrix2d a;
  a << -kappa, eps, eps, -kappa;
  const Eigen::Matrix2d inv = a.inverse();
  const double g = std::sqrt(2.0 * kappa);
  return {g * inv(0, 0), g * inv(0, 1)};
}

/// b ≈ a₊ + √(2κ)(√k c₊): coefficients of a₊ and a₋* in the output.
inline std::pair<double, double> output_coefficients(double eps, double kappa) {
  const auto [ca, cb] = adiabatic_coefficients(eps, kappa);
  const double g = std::sqrt(2.0 * kappa);
  return {1.0 + g * ca, g * cb};
}

struct ConvergenceRow {
  double k;
  double t;
  double cascade;
  double thermal;
  double abs_error;
};

struct ConvergencePoint {
  double k = 0.0;
  double final_error = 0.0;
  double step = 0.0;
  long steps = 0;
  double max_leak = 0.0;
  std::string failure;  // empty on success
  std::vector<ConvergenceRow> rows;
};

struct ConvergenceResult {
  double n = 0.0;
  std::vector<ConvergencePoint> points;

  bool all_ok() const {
    for (const auto& p : points) {
      if (!p.failure.empty()) return false;
    }
    return true;
  }
  /// Final-time errors strictly decrease along the k list (ties at exactly 0 allowed).
  bool errors_decreasing() const {
    if (!all_ok()) return false;
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double a = points[i - 1].final_error, b = points[i].final_error;
      if (!(b < a) && !(a == 0.0 && b == 0.0)) return false;
    }
    return true;
  }
};

struct ConvergenceOptions {
  double leak_fail = 1e-4;
  /// Step rule h = step_scale/(k·max(κ,ε)), capped by stability_bound/‖ℒ‖.
  double step_scale = 0.02;
  double stability_bound = 0.1;
  /// 0 reads GQFN_THREADS, defaulting to hardware concurrency.
  unsigned threads = 0;
};

inline unsigned sweep_threads(unsigned requested, std::size_t jobs) {
  unsigned n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("GQFN_THREADS")) n = static_cast<unsigned>(std::max(1L, std::atol(env)));
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, jobs)));
}

/// Evolves G ◁ G_DPA (vacuum inputs) and G under thermal noise n = thermal_n(ε,κ)
/// from ρ₀ ⊗ |0,0⟩⟨0,0| and ρ₀, and compares ⟨X⟩ on the grid.
/// `g` and `observable` live on the system space.
inline ConvergenceResult convergence_experiment(const SlhModel& g, double eps, double kappa,
                                                const std::vector<double>& k_list, const Operator& observable,
                                                const std::vector<double>& grid, const DensityOperator& rho0,
                                                std::size_t truncation, const ConvergenceOptions& opt = {}) {
  if (g.channels() != 1) throw DomainError("convergence_experiment: system must have one channel");
  if (!is_static(g)) throw DomainError("convergence_experiment: system scattering must be static");
  if (k_list.empty()) throw DomainError("convergence_experiment: empty k list");
  for (std::size_t i = 1; i < k_list.size(); ++i) {
    if (!(k_list[i] > k_list[i - 1])) throw DomainError("convergence_experiment: k list must increase");
  }
  if (!(observable.space() == g.space()) || !(rho0.space() == g.space())) {
    throw DomainError("convergence_experiment: observable and state must live on the system space");
  }
  ConvergenceResult res;
  res.n = thermal_n(eps, kappa);

  // Thermal reference on the system alone.
  const SuperOperator lth = gaussian_lindblad(g, GaussianNoiseSpec::thermal(res.n));
  const StateTrajectory ref = master_evolve(lth, rho0, grid);
  std::vector<double> thermal;
  for (const auto& r : ref.states) thermal.push_back((r * observable.matrix()).trace().real());

  const DpaLayout lay = dpa_layout(g.space(), truncation);
  const HilbertSpec modes({truncation, truncation});
  const SlhModel gj = extend_right(g, modes);
  const Operator xj = extend(observable, modes);
  const DensityOperator rho_j = tensor(rho0, DensityOperator::basis_state(modes, 0));

  res.points.resize(k_list.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < k_list.size(); i = next++) {
      ConvergencePoint& pt = res.points[i];
      pt.k = k_list[i];
      try {
        const DpaParams p{eps, kappa, k_list[i], truncation};
        const SlhModel cas = cascade(gj, p, lay.plus, lay.minus);
        const SandwichSum lind = vacuum_lindblad_terms(cas.l_column(), cas.h());
        EvolveOptions eo;
        eo.leak_factors = {lay.plus, lay.minus};
        eo.leak_fail = opt.leak_fail;
        Rk4Options ro;
        ro.stability_bound = opt.stability_bound;
        const Rk4Propagator probe(lind.adjoint());
        ro.norm = probe.norm_estimate();
        ro.h = std::min(opt.step_scale / (p.k * std::max(p.kappa, p.eps)), opt.stability_bound / ro.norm);
        Rk4Info info;
        const StateTrajectory st = master_evolve_rk4(lind, rho_j, grid, eo, ro, &info);
        pt.step = info.h;
        pt.steps = info.steps;
        pt.max_leak = st.max_leak;
        for (std::size_t j = 0; j < grid.size(); ++j) {
          const double c = (st.states[j] * xj.matrix()).trace().real();
          pt.rows.push_back({p.k, grid[j], c, thermal[j], std::abs(c - thermal[j])});
        }
        pt.final_error = pt.rows.back().abs_error;
      } catch (const std::exception& e) {
        pt.failure = e.what();
      }
    }
  };
  const unsigned nt = sweep_threads(opt.threads, k_list.size());
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return res;
}

/// CSV "k,t,observable_cascade,observable_thermal,abs_error" preceded by a
/// "# thermal_n=" metadata line.
inline void write_convergence_csv(std::ostream& os, const ConvergenceResult& r) {
  os << "# thermal_n=" << fmt17(r.n) << '\n';
  os << "k,t,observable_cascade,observable_thermal,abs_error\n";
  for (const auto& p : r.points) {
    for (const auto& row : p.rows) {
      os << fmt17(row.k) << ',' << fmt17(row.t) << ',' << fmt17(row.cascade) << ',' << fmt17(row.thermal) << ','
         << fmt17(row.abs_error) << '\n';
    }
  }
}

}  // namespace gqfn
