#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gqfn/dpa.hpp"
#include "support/random.hpp"

using namespace gqfn;

namespace {

const HilbertSpec kQubit({2});

SlhModel decaying_qubit(const HilbertSpec& space) {
  return SlhModel::from_couplings({sigma_minus(space, 0)}, Operator::zero(space));
}

}  // namespace

TEST(ThermalN, Examples) {
  EXPECT_NEAR(thermal_n(2.0, 1.0), 16.0 / 9.0, 1e-14);
  EXPECT_NEAR(thermal_n(3.0, 1.0), 0.5625, 1e-14);
  EXPECT_NEAR(thermal_n(1.0 / 3.0, 1.0), 0.5625, 1e-14);
  EXPECT_THROW(thermal_n(1.0, 1.0), DomainError);
  EXPECT_THROW(thermal_n(-1.0, 1.0), DomainError);
}

TEST(DpaParams, StableMirrorKeepsN) {
  DpaParams p{3.0, 1.0, 10.0, 8};
  const DpaParams m = p.stable_mirror();
  EXPECT_TRUE(m.is_below_threshold());
  EXPECT_NEAR(m.eps, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(thermal_n(m.eps, m.kappa), thermal_n(p.eps, p.kappa), 1e-14);
  EXPECT_EQ(m.k, p.k);
}

TEST(Transfer, StaticValuesAtZeroFrequency) {
  const DpaParams p{2.0, 1.0, 1.0, 2};
  const TransferPair t = transfer(p, 0.0);
  EXPECT_NEAR(std::abs(t.xi_minus(0, 0) - 5.0 / 3.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(t.xi_plus(0, 1)), 4.0 / 3.0, 1e-14);
  const StaticCoefficients sc = static_limit(2.0, 1.0);
  EXPECT_NEAR(std::abs(t.xi_plus(0, 1) - sc.cross), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(t.xi_minus(1, 1) - sc.direct), 0.0, 1e-14);
}

TEST(Transfer, MatchesStateSpace) {
  for (double eps : {0.4, 2.0, 3.0}) {
    for (double k : {1.0, 7.0}) {
      const DpaParams p{eps, 1.0, k, 2};
      for (cplx s : {cplx(0.0, 1.0), cplx(0.3, -2.0), cplx(5.0, 0.5)}) {
        const TransferPair a = transfer(p, s);
        const TransferPair b = transfer_state_space(p, s);
        EXPECT_LT(max_abs_diff(a.xi_minus, b.xi_minus), 1e-12);
        EXPECT_LT(max_abs_diff(a.xi_plus, b.xi_plus), 1e-12);
      }
    }
  }
}

TEST(Transfer, BogoliubovOnImaginaryAxis) {
  // |u|² − |v|² = 1 for every real frequency
  for (double w : {0.0, 0.5, 3.0}) {
    const cplx u = transfer_u(3.0, 1.0, cplx(0.0, w));
    const cplx v = transfer_v(3.0, 1.0, cplx(0.0, w));
    EXPECT_NEAR(std::norm(u) - std::norm(v), 1.0, 1e-12);
  }
}

TEST(Transfer, ApproachesStaticLimitMonotonically) {
  const StaticCoefficients sc = static_limit(2.0, 1.0);
  double prev = 1e300;
  for (double k : {10.0, 100.0, 1000.0}) {
    const TransferPair t = transfer(DpaParams{2.0, 1.0, k, 2}, cplx(0.0, 1.0));
    const double err = std::max(std::abs(t.xi_minus(0, 0) - sc.direct), std::abs(t.xi_plus(0, 1) - sc.cross));
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Transfer, FirstOrderInInverseK) {
  const StaticCoefficients sc = static_limit(3.0, 1.0);
  auto err = [&](double k) {
    const TransferPair t = transfer(DpaParams{3.0, 1.0, k, 2}, cplx(0.0, 1.0));
    return std::max(std::abs(t.xi_minus(0, 0) - sc.direct), std::abs(t.xi_plus(0, 1) - sc.cross));
  };
  for (double k : {10.0, 40.0, 160.0}) {
    const double ratio = err(k) / err(4.0 * k);
    EXPECT_GT(ratio, 2.0);
    EXPECT_LT(ratio, 8.0);
  }
}

TEST(Transfer, PoleThrows) {
  EXPECT_THROW(transfer_u(2.0, 1.0, cplx(1.0, 0.0)), DomainError);
  EXPECT_THROW(transfer(DpaParams{2.0, 1.0, 0.0, 2}, 0.0), DomainError);
}

TEST(StaticCoefficientsTest, BogoliubovIdentity) {
  for (double eps : {0.2, 1.0 / 3.0, 2.0, 3.0, 7.5}) {
    const StaticCoefficients sc = static_limit(eps, 1.0);
    EXPECT_NEAR(sc.direct * sc.direct - sc.cross * sc.cross, 1.0, 1e-12);
    EXPECT_NEAR(sc.cross * sc.cross, thermal_n(eps, 1.0), 1e-12);
  }
}

TEST(Adiabatic, CoefficientsClosedForm) {
  for (double eps : {0.5, 3.0}) {
    const double kappa = 1.0;
    const auto [ca, cb] = adiabatic_coefficients(eps, kappa);
    const double pre = std::sqrt(2.0 * kappa) / (eps * eps - kappa * kappa);
    EXPECT_NEAR(ca, pre * kappa, 1e-14);
    EXPECT_NEAR(cb, pre * eps, 1e-14);
    const auto [oa, ob] = output_coefficients(eps, kappa);
    const StaticCoefficients sc = static_limit(eps, kappa);
    EXPECT_NEAR(oa, sc.direct, 1e-13);
    EXPECT_NEAR(ob, sc.cross, 1e-13);
  }
}

TEST(BuildDpa, Structure) {
  const DpaLayout lay = dpa_layout(kQubit, 4);
  EXPECT_EQ(lay.space.total_dim(), 2 * 16);
  EXPECT_EQ(lay.plus, 1u);
  EXPECT_EQ(lay.minus, 2u);
  const SlhModel d = build_dpa(DpaParams{3.0, 1.0, 5.0, 4}, lay.space, lay.plus, lay.minus);
  EXPECT_EQ(d.channels(), 2);
  EXPECT_LT(d.hermiticity_residual(), 1e-12);
  EXPECT_LT(d.unitarity_residual(), 1e-12);
  EXPECT_LT(max_abs_diff(d.l(0), std::sqrt(10.0) * annihilator(lay.space, 1)), 1e-12);

  const SlhModel z = build_dpa(DpaParams{3.0, 1.0, 0.0, 4}, lay.space, lay.plus, lay.minus);
  EXPECT_LT(z.l(0).matrix().norm() + z.l(1).matrix().norm() + z.h().matrix().norm(), 1e-15);

  EXPECT_THROW(build_dpa(DpaParams{3.0, 1.0, 5.0, 5}, lay.space, lay.plus, lay.minus), DomainError);
  EXPECT_THROW(build_dpa(DpaParams{3.0, 1.0, 5.0, 4}, lay.space, lay.plus, lay.plus), DomainError);
}

TEST(BuildDpa, LinearDriftOnPlusMode) {
  // ℒ(c₊) = −κk c₊ + εk c₋*, apart from the top level of c₊
  const std::size_t t = 5;
  const DpaParams p{0.7, 1.3, 2.0, t};
  const DpaLayout lay = dpa_layout(kQubit, t);
  const SlhModel d = build_dpa(p, lay.space, lay.plus, lay.minus);
  const Operator cp = annihilator(lay.space, lay.plus);
  const Operator cm = annihilator(lay.space, lay.minus);
  const Operator got = vacuum_lindblad(d).apply(cp);
  const Operator want = (-p.kappa * p.k) * cp + (p.eps * p.k) * cm.adjoint();
  Matrix below = Matrix::Identity(t, t);
  below(t - 1, t - 1) = 0.0;
  const Matrix proj = embed(below, lay.space, lay.plus).matrix();
  EXPECT_LT(max_abs_diff(Matrix(proj * got.matrix()), Matrix(proj * want.matrix())), 1e-12);
}

TEST(Cascade, MatchesClosedForm) {
  gqfn::testing::Rng rng(91);
  const DpaLayout lay = dpa_layout(kQubit, 3);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix s = Matrix::Identity(1, 1);
    if (trial % 2) s(0, 0) = std::polar(1.0, rng.uniform(0.0, 6.0));
    const SlhModel g =
        SlhModel::from_scalar_s(s, {rng.op(lay.space)}, rng.herm(lay.space));
    const DpaParams p{rng.uniform(0.1, 3.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 5.0), 3};
    if (std::abs(p.eps - p.kappa) < 1e-3) continue;
    const SlhModel a = cascade(g, p, lay.plus, lay.minus);
    const SlhModel b = cascade_closed_form(g, p, lay.plus, lay.minus);
    EXPECT_LT(model_distance(a, b), 1e-12);
  }
}

TEST(Cascade, TrivialSystemGivesDpa) {
  const DpaLayout lay = dpa_layout(kQubit, 3);
  const DpaParams p{2.0, 1.0, 3.0, 3};
  const SlhModel g = SlhModel::from_couplings({Operator::zero(lay.space)}, Operator::zero(lay.space));
  EXPECT_LT(model_distance(cascade(g, p, lay.plus, lay.minus), build_dpa(p, lay.space, lay.plus, lay.minus)),
            1e-13);
}

TEST(Cascade, RejectsOperatorScattering) {
  gqfn::testing::Rng rng(5);
  const DpaLayout lay = dpa_layout(kQubit, 2);
  const SlhModel g = rng.full_model(lay.space, 1);
  EXPECT_THROW(cascade(g, DpaParams{2.0, 1.0, 1.0, 2}, lay.plus, lay.minus), DomainError);
}

TEST(Convergence, InertObservableHasNoError) {
  const std::vector<double> grid{0.0, 0.1, 0.2};
  const ConvergenceResult r = convergence_experiment(decaying_qubit(kQubit), 0.2, 1.0, {1.0, 2.0},
                                                     Operator::identity(kQubit), grid,
                                                     DensityOperator::basis_state(kQubit, 1), 6);
  ASSERT_TRUE(r.all_ok()) << r.points[0].failure;
  for (const auto& pt : r.points) {
    EXPECT_LT(pt.final_error, 1e-9);
    EXPECT_EQ(pt.rows.size(), grid.size());
  }
}

TEST(Convergence, BelowThresholdErrorShrinks) {
  const std::vector<double> grid{0.0, 0.25, 0.5};
  const Operator pe = sigma_plus(kQubit, 0) * sigma_minus(kQubit, 0);
  const ConvergenceResult r = convergence_experiment(decaying_qubit(kQubit), 0.3, 1.0, {2.0, 8.0}, pe, grid,
                                                     DensityOperator::basis_state(kQubit, 1), 4);
  EXPECT_NEAR(r.n, thermal_n(0.3, 1.0), 1e-14);
  ASSERT_TRUE(r.all_ok()) << r.points[0].failure << r.points[1].failure;
  EXPECT_TRUE(r.errors_decreasing());
  EXPECT_LT(r.points[1].final_error, 0.05);

  std::ostringstream os;
  write_convergence_csv(os, r);
  EXPECT_EQ(os.str().rfind("# thermal_n=", 0), 0u);
}

TEST(Convergence, AboveThresholdLeaks) {
  const std::vector<double> grid{0.0, 0.5};
  const Operator pe = sigma_plus(kQubit, 0) * sigma_minus(kQubit, 0);
  const ConvergenceResult r = convergence_experiment(decaying_qubit(kQubit), 3.0, 1.0, {10.0}, pe, grid,
                                                     DensityOperator::basis_state(kQubit, 1), 4);
  EXPECT_FALSE(r.all_ok());
  EXPECT_NE(r.points[0].failure.find("leak"), std::string::npos);
}

TEST(Convergence, RejectsBadInput) {
  const Operator pe = sigma_plus(kQubit, 0) * sigma_minus(kQubit, 0);
  const DensityOperator rho = DensityOperator::basis_state(kQubit, 1);
  EXPECT_THROW(convergence_experiment(decaying_qubit(kQubit), 0.3, 1.0, {}, pe, {0.0, 1.0}, rho, 3),
               DomainError);
  EXPECT_THROW(convergence_experiment(decaying_qubit(kQubit), 0.3, 1.0, {4.0, 2.0}, pe, {0.0, 1.0}, rho, 3),
               DomainError);
}
