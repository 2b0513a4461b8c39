#include <gtest/gtest.h>

#include "morsehom/nondeg.hpp"

namespace morsehom {
namespace {

CriticalPoint at(const Vector& u) { return CriticalPoint{0, u, 0.0, 0.0, 0, {}}; }

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Matrix diag2(double a, double b) { return v2(a, b).asDiagonal(); }

struct LambdaFifty {
  Mesh mesh = Mesh::interval(0, 1, 32);
  std::shared_ptr<GalerkinFunctional> F =
      assemble(PsiModel::area_kappa(3.0, 1.0), GModel::linear(50.0), mesh);
  CriticalPoint zero = at(Vector::Zero(F->dofs()));
  Splitting s = splitting(*F, zero);
};

TEST(Hyperbolic, DoubleWellMinimumIsMinusIdentity) {
  const auto F = fixtures::double_well();
  const auto L = HyperbolicOperator::from_splitting(splitting(*F, at(v2(1, 0))));
  EXPECT_LE((L.matrix() + Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(Hyperbolic, DoubleWellSaddleExpandsAlongX) {
  const auto F = fixtures::double_well();
  const auto L = HyperbolicOperator::from_splitting(splitting(*F, at(v2(0, 0))));
  EXPECT_LE((L.matrix() - diag2(1, -1)).norm(), 1e-12);
}

TEST(Hyperbolic, InvolutionAndSemigroupLaw) {
  LambdaFifty p;
  const auto L = HyperbolicOperator::from_splitting(p.s);
  const Index n = L.dim();
  EXPECT_LE((L.matrix() * L.matrix() - Matrix::Identity(n, n)).norm(), 1e-10 * n);
  EXPECT_LE((L.exp(1.0) * L.exp(1.0) - L.exp(2.0)).norm(), 1e-10 * L.exp(2.0).norm());
  EXPECT_LE((L.exp(0.0) - Matrix::Identity(n, n)).norm(), 1e-10 * n);
  // Spectrum in {-1, +1}.
  const Eigen::VectorXcd ev = L.matrix().eigenvalues();
  for (Index k = 0; k < n; ++k) {
    EXPECT_NEAR(std::abs(ev[k].real()), 1.0, 1e-8);
    EXPECT_NEAR(ev[k].imag(), 0.0, 1e-8);
  }
}

TEST(Hyperbolic, DegenerateSplittingIsRefused) {
  const auto F = fixtures::quartic_saddle();
  const auto s = splitting(*F, at(v2(0, 0)));
  ASSERT_EQ(s.null_count, 1);
  EXPECT_THROW(HyperbolicOperator::from_splitting(s), RefusalError);
}

TEST(Lyapunov, SaddleQuadraticExactValue) {
  const auto F = fixtures::saddle_quadratic();
  const auto L = HyperbolicOperator::from_projectors(diag2(0, 1), diag2(1, 0), diag2(1, 1));
  const Vector h = v2(1, 1);
  EXPECT_DOUBLE_EQ(F->gradient(h).dot(L.matrix() * h), -4.0);
  const auto cert = lyapunov_certificate(*F, at(v2(0, 0)), L, 1.0, 500, 7);
  EXPECT_TRUE(cert.passed());
  EXPECT_NEAR(cert.worst_margin, 2.0, 1e-12);
  EXPECT_FALSE(cert.failure_witness);
}

TEST(Lyapunov, QuarticAdmitsMinusIdentity) {
  const auto F = fixtures::quartic();
  const Matrix one = Matrix::Identity(1, 1);
  const auto L = HyperbolicOperator::from_projectors(Matrix::Zero(1, 1), one, one);
  const auto cert = lyapunov_certificate(*F, at(Vector::Zero(1)), L, 0.5, 200, 3);
  EXPECT_TRUE(cert.passed());
  EXPECT_GT(cert.worst_margin, 0.0);
}

TEST(Lyapunov, WrongOperatorFailsWithReproducibleWitness) {
  const auto F = fixtures::saddle_quadratic();
  const Matrix I = Matrix::Identity(2, 2);
  const auto L = HyperbolicOperator::from_projectors(I, Matrix::Zero(2, 2), I);
  const auto cert = lyapunov_certificate(*F, at(v2(0, 0)), L, 1.0, 500, 11);
  EXPECT_FALSE(cert.passed());
  ASSERT_TRUE(cert.failure_witness);
  const Vector w = *cert.failure_witness;
  EXPECT_GT(F->gradient(w).dot(L.matrix() * w), 0.0);
  EXPECT_GT(std::abs(w[0]), std::abs(w[1]));  // near the x-axis side
}

TEST(Lyapunov, DeterministicForFixedSeed) {
  LambdaFifty p;
  const auto L = HyperbolicOperator::from_splitting(p.s);
  const auto a = lyapunov_certificate(*p.F, p.zero, L, 0.1, 300, 42);
  const auto b = lyapunov_certificate(*p.F, p.zero, L, 0.1, 300, 42);
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  EXPECT_EQ(a.verdict, b.verdict);
}

TEST(Lyapunov, RejectsBadArguments) {
  const auto F = fixtures::saddle_quadratic();
  const Matrix I = Matrix::Identity(2, 2);
  const auto L = HyperbolicOperator::from_projectors(I, Matrix::Zero(2, 2), I);
  EXPECT_THROW(lyapunov_certificate(*F, at(v2(0, 0)), L, 0.0, 10, 1), InvalidInput);
  EXPECT_THROW(lyapunov_certificate(*F, at(v2(0, 0)), L, 1.0, 0, 1), InvalidInput);
}

TEST(Criterion, SaddleQuadraticConstants) {
  const auto F = fixtures::saddle_quadratic();
  const auto s = splitting(*F, at(v2(0, 0)));
  for (double delta : {0.01, 1.0, 100.0}) {
    const auto cert = criterion_check(*F, at(v2(0, 0)), s, delta, 400, 5);
    EXPECT_TRUE(cert.passed());
    EXPECT_NEAR(cert.c, 1.0, 1e-12);
    EXPECT_NEAR(cert.c1, 1.0, 1e-12);
    const auto with_two = criterion_check(*F, at(v2(0, 0)), s, delta, 400, 5, {.c1 = 2.0});
    EXPECT_TRUE(with_two.passed());
    EXPECT_DOUBLE_EQ(with_two.c1, 2.0);
  }
}

TEST(Criterion, QuarticSaddleFailsNearXAxis) {
  const auto F = fixtures::quartic_saddle();
  const auto s = splitting(*F, at(v2(0, 0)));
  const auto cert = criterion_check(*F, at(v2(0, 0)), s, 0.5, 1000, 9);
  EXPECT_FALSE(cert.passed());
  ASSERT_TRUE(cert.failure_witness);
  const Vector w = *cert.failure_witness;
  EXPECT_GT(std::abs(w[0]), std::abs(w[1]));
  // Oracle: along the x-axis 12 x^4 >= c1 x^2 fails once x^2 < c1 / 12.
  for (double x : {0.1, 0.01, 0.001}) {
    EXPECT_LT(12.0 * x * x * x * x, cert.c1 * x * x);
  }
}

TEST(Criterion, GalerkinLambdaFiftyPassesAndImpliesLyapunov) {
  LambdaFifty p;
  const auto result = certify(*p.F, p.zero, p.s, {}, {.samples = 400, .seed = 1, .criterion = {}});
  EXPECT_TRUE(result.criterion.passed());
  EXPECT_GT(result.criterion.c, 0.0);
  EXPECT_GT(result.criterion.c1, 0.0);
  EXPECT_TRUE(result.lyapunov.passed());
}

TEST(Criterion, DoubleWellPointsCertify) {
  const auto F = fixtures::double_well();
  const std::vector<CriticalPoint> cps{at(v2(-1, 0)), at(v2(1, 0)), at(v2(0, 0))};
  for (const auto& cp : cps) {
    const auto s = splitting(*F, cp);
    const auto result = certify(*F, cp, s, cps, {.samples = 500, .seed = 3, .criterion = {}});
    EXPECT_TRUE(result.passed()) << cp.coefficients.transpose();
    EXPECT_LE(result.criterion.delta, 0.5 + 1e-12);
  }
}

TEST(Criterion, CertifyRefusesDegeneratePoints) {
  const auto F = fixtures::quartic_saddle();
  const auto s = splitting(*F, at(v2(0, 0)));
  EXPECT_THROW(certify(*F, at(v2(0, 0)), s, {}), RefusalError);
}

}  // namespace
}  // namespace morsehom
