#include <gtest/gtest.h>

#include "gqfn/operator.hpp"
#include "support/random.hpp"

using namespace gqfn;
using gqfn::testing::Rng;

TEST(HilbertSpec, TotalDimAndValidation) {
  HilbertSpec sp({3, 2, 4});
  EXPECT_EQ(sp.total_dim(), 24);
  EXPECT_EQ(sp.factors(), 3u);
  EXPECT_THROW(HilbertSpec({2, 0}), DomainError);
}

TEST(Annihilator, QubitSized) {
  Matrix want(2, 2);
  want << 0, 1, 0, 0;
  EXPECT_EQ(annihilator(HilbertSpec({2}), 0).matrix(), want);
}

TEST(Annihilator, LadderEntries) {
  const Matrix a = annihilator(HilbertSpec({3}), 0).matrix();
  EXPECT_DOUBLE_EQ(a(0, 1).real(), 1.0);
  EXPECT_DOUBLE_EQ(a(1, 2).real(), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(a.cwiseAbs().sum(), 1.0 + std::sqrt(2.0));
}

TEST(Annihilator, SecondFactorIsKroneckerByHand) {
  // I2 ⊗ [[0,1],[0,0]] written out
  Matrix want = Matrix::Zero(4, 4);
  want(0, 1) = 1;
  want(2, 3) = 1;
  EXPECT_EQ(annihilator(HilbertSpec({2, 2}), 1).matrix(), want);
}

TEST(Annihilator, Errors) {
  EXPECT_THROW(annihilator(HilbertSpec({2}), 1), DomainError);
  EXPECT_THROW(annihilator(HilbertSpec({1, 2}), 0), DomainError);
}

TEST(Embed, IdentityAndSigmaZ) {
  HilbertSpec sp({3, 2});
  EXPECT_EQ(embed(Matrix::Identity(3, 3), sp, 0).matrix(), Matrix::Identity(6, 6));
  HilbertSpec q({2, 2});
  EXPECT_EQ(embed(qubit::sigma_z(), q, 1).matrix(), kron(Matrix::Identity(2, 2), qubit::sigma_z()));
  EXPECT_THROW(embed(Matrix::Identity(3, 3), q, 0), DomainError);
}

TEST(Embed, ModesOnDistinctFactorsCommute) {
  HilbertSpec sp({3, 3});
  const Operator a0 = annihilator(sp, 0), a1 = annihilator(sp, 1);
  EXPECT_LT(commutator(a0, a1).matrix().norm(), 1e-15);
  EXPECT_LT(commutator(a0, a1.adjoint()).matrix().norm(), 1e-15);
}

TEST(Embed, Homomorphism) {
  Rng rng(1);
  HilbertSpec sp({3, 2, 2});
  for (std::size_t f = 0; f < 3; ++f) {
    const Index d = static_cast<Index>(sp.dim(f));
    const Matrix x = rng.matrix(d, d), y = rng.matrix(d, d);
    const Matrix lhs = embed(x * y, sp, f).matrix();
    const Matrix rhs = (embed(x, sp, f) * embed(y, sp, f)).matrix();
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-14 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
  }
}

TEST(Commutator, TruncatedCcr) {
  HilbertSpec sp({10});
  const Operator a = annihilator(sp, 0);
  Matrix want = Matrix::Identity(10, 10);
  want(9, 9) = -9.0;
  EXPECT_LT(max_abs_diff(commutator(a, a.adjoint()).matrix(), want), 1e-13);
  EXPECT_LT(max_abs_diff(commutator(a.adjoint(), a), -commutator(a, a.adjoint())), 1e-15);
}

TEST(Commutator, SelfIsZeroAndSpaceMismatch) {
  const Operator z = sigma_z(HilbertSpec({2}), 0);
  EXPECT_EQ(commutator(z, z).matrix(), Matrix::Zero(2, 2));
  EXPECT_THROW(commutator(z, Operator::identity(HilbertSpec({3}))), DomainError);
}

TEST(Adjoint, InvolutionAndContravariance) {
  Rng rng(2);
  HilbertSpec sp({3, 2});
  for (int i = 0; i < 20; ++i) {
    const Operator x = rng.op(sp), y = rng.op(sp);
    EXPECT_EQ(x.adjoint().adjoint().matrix(), x.matrix());
    EXPECT_LT(max_abs_diff((x * y).adjoint(), y.adjoint() * x.adjoint()), 1e-14 * 10);
  }
}

TEST(Pinv, IdentityAndDiagonal) {
  EXPECT_LT(max_abs_diff(pinv(Matrix::Identity(2, 2)), Matrix::Identity(2, 2)), 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 0.5;
  EXPECT_LT(max_abs_diff(pinv(d), want), 1e-15);
}

TEST(Pinv, PenroseConditionsOnRankDeficient) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Matrix m = rng.matrix(3, 2) * rng.matrix(2, 3);
    const Matrix p = pinv(m);
    EXPECT_LT(max_abs_diff(m * p * m, m), 1e-10);
    EXPECT_LT(max_abs_diff(p * m * p, p), 1e-10);
    EXPECT_LT(max_abs_diff(m * p, (m * p).adjoint()), 1e-10);
    EXPECT_LT(max_abs_diff(p * m, (p * m).adjoint()), 1e-10);
  }
}

TEST(IsPsd, Examples) {
  EXPECT_TRUE(is_psd(Matrix::Zero(3, 3), 1e-9).psd);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = -0.1;
  const PsdReport r = is_psd(d, 1e-9);
  EXPECT_FALSE(r.psd);
  EXPECT_NEAR(r.min_eigenvalue, -0.1, 1e-15);
  EXPECT_THROW(is_psd(Matrix::Zero(2, 3), 1e-9), DomainError);
  // thermal n=1 covariance
  Matrix f = Matrix::Zero(2, 2);
  f(0, 0) = 2;
  f(1, 1) = 1;
  EXPECT_TRUE(is_psd(f, 1e-9).psd);
}

TEST(Matexp, Basics) {
  EXPECT_LT(max_abs_diff(matexp(Matrix::Zero(3, 3)), Matrix::Identity(3, 3)), 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = cplx(0.3, 1.0);
  d(1, 1) = -2.0;
  const Matrix e = matexp(d);
  EXPECT_LT(std::abs(e(0, 0) - std::exp(cplx(0.3, 1.0))), 1e-14);
  EXPECT_LT(std::abs(e(1, 1) - std::exp(-2.0)), 1e-15);
  EXPECT_THROW(matexp(Matrix::Zero(2, 3)), DomainError);
}

TEST(Matexp, InverseAndUnitarity) {
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const Matrix a = rng.matrix(4, 4);
    EXPECT_LT(max_abs_diff(matexp(a) * matexp(-a), Matrix::Identity(4, 4)), 1e-10);
    const Matrix h = rng.hermitian(4);
    const Matrix u = matexp(kI * h);
    EXPECT_LT(max_abs_diff(u * u.adjoint(), Matrix::Identity(4, 4)), 1e-10);
  }
}
