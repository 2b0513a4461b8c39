#include <gtest/gtest.h>

#include "morsehom/functional.hpp"
#include "test_support.hpp"

#include <cmath>
#include <functional>
#include <numbers>

namespace morsehom {
namespace {

using std::numbers::pi;

SmallVec vec2(double a, double b) {
  SmallVec v(2);
  v << a, b;
  return v;
}

// ---------------------------------------------------------------------------
// PsiModel
// ---------------------------------------------------------------------------

TEST(PsiDerivatives, OriginIsFlat) {
  const auto psi = PsiModel::area_kappa(3.0, 1.0);
  const auto d = psi_derivatives(psi, vec2(0.0, 0.0));
  EXPECT_NEAR(d.value, 0.0, 1e-12);
  EXPECT_NEAR(d.gradient.norm(), 0.0, 1e-12);
  EXPECT_NEAR((d.hessian - SmallMat::Identity(2, 2)).norm(), 0.0, 1e-14);

  const auto ppq = PsiModel::power_plus_quadratic(3.5);
  const auto e = psi_derivatives(ppq, vec2(0.0, 0.0));
  EXPECT_NEAR(e.value, 0.0, 1e-12);
  EXPECT_NEAR(e.gradient.norm(), 0.0, 1e-12);
}

TEST(PsiDerivatives, HessianAtOriginMatchesFiniteDifferences) {
  const auto psi = PsiModel::area_kappa(3.0, 1.0);
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    SmallVec e = SmallVec::Zero(2);
    e[j] = h;
    const SmallVec col = (psi_derivatives(psi, e).gradient - psi_derivatives(psi, -e).gradient) / (2 * h);
    EXPECT_NEAR(col[j], 1.0, 1e-8);
    EXPECT_NEAR(col[1 - j], 0.0, 1e-8);
  }
}

TEST(PsiDerivatives, UnitVectorValues) {
  const auto psi = PsiModel::area_kappa(3.0, 1.0);
  const auto d = psi_derivatives(psi, vec2(1.0, 0.0));
  // (2^{3/2} - 1) / 3, sqrt(2), sqrt(2) + 1/sqrt(2)
  EXPECT_NEAR(d.value, (std::pow(2.0, 1.5) - 1.0) / 3.0, 1e-14);
  EXPECT_NEAR(d.value, 0.60948, 1e-5);
  EXPECT_NEAR(d.gradient[0], 1.41421, 1e-5);
  EXPECT_NEAR(d.gradient[1], 0.0, 1e-15);
  EXPECT_NEAR(d.hessian(0, 0), 2.12132, 1e-5);
  EXPECT_NEAR(d.hessian(1, 1), 1.41421, 1e-5);
  EXPECT_NEAR(d.hessian(0, 1), 0.0, 1e-15);

  // Cross-check the closed forms by central differences.
  const double h = 1e-5;
  const double fd = (psi_derivatives(psi, vec2(1.0 + h, 0.0)).value -
                     psi_derivatives(psi, vec2(1.0 - h, 0.0)).value) / (2 * h);
  EXPECT_NEAR(fd, d.gradient[0], 1e-9);
  const double fd2 = (psi_derivatives(psi, vec2(1.0 + h, 0.0)).gradient[0] -
                      psi_derivatives(psi, vec2(1.0 - h, 0.0)).gradient[0]) / (2 * h);
  EXPECT_NEAR(fd2, d.hessian(0, 0), 1e-9);
}

TEST(PsiDerivatives, RejectsNonFiniteArgument) {
  const auto psi = PsiModel::area_kappa(3.0, 1.0);
  EXPECT_THROW(psi_derivatives(psi, vec2(std::nan(""), 0.0)), InvalidInput);
  EXPECT_THROW(psi_derivatives(psi, vec2(kInf, 0.0)), InvalidInput);
}

TEST(PsiModel, ValidatesParameters) {
  EXPECT_THROW(PsiModel::area_kappa(2.0, 1.0), InvalidInput);
  EXPECT_THROW(PsiModel::area_kappa(1.5, 1.0), InvalidInput);
  EXPECT_THROW(PsiModel::area_kappa(3.0, 0.0), InvalidInput);
  EXPECT_THROW(PsiModel::power_plus_quadratic(2.0), InvalidInput);
  EXPECT_THROW(PsiModel::make_custom(3.0, 1.0, 2.0, 1.0, nullptr), InvalidInput);
}

TEST(PsiModel, ConvexitySandwichHoldsOnRandomSamples) {
  NormalSampler rng(substream(7, "psi-sandwich"));
  for (const auto& psi : {PsiModel::area_kappa(3.0, 1.0), PsiModel::area_kappa(4.5, 0.3),
                          PsiModel::power_plus_quadratic(3.0),
                          PsiModel::power_plus_quadratic(5.0)}) {
    for (int i = 0; i < 1000; ++i) {
      const int n = 1 + i % 2;
      SmallVec xi(n);
      const double scale = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
      for (int k = 0; k < n; ++k) xi[k] = scale * rng.normal();
      const auto [lower, upper] = sandwich_margins(psi, xi);
      EXPECT_GE(lower, -1e-10) << to_string(psi.kind) << " at |xi|=" << xi.norm();
      EXPECT_GE(upper, -1e-10) << to_string(psi.kind) << " at |xi|=" << xi.norm();
    }
  }
}

TEST(PsiModel, HessianIsPositiveDefinite) {
  const auto psi = PsiModel::area_kappa(3.0, 1.0);
  NormalSampler rng(substream(3, "psi-spd"));
  for (int i = 0; i < 200; ++i) {
    const auto h = psi_derivatives(psi, vec2(5 * rng.normal(), 5 * rng.normal())).hessian;
    Eigen::SelfAdjointEigenSolver<SmallMat> es(h);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

// ---------------------------------------------------------------------------
// GModel
// ---------------------------------------------------------------------------

TEST(GModel, FixturesSatisfyGrowthBoundAndAntiderivative) {
  std::vector<double> ss;
  for (int i = -60; i <= 60; ++i) ss.push_back(0.05 * i);
  const std::vector<Point> xs{Point(0.1, 0.0), Point(0.7, 0.3)};
  for (const auto& g : {GModel::zero(), GModel::linear(50.0), GModel::linear(-3.0),
                        GModel::power(5.0, 2.0), GModel::power(1.0, 4.0),
                        GModel::power_sum({{1.0, 4.0}, {-10.0, 2.0}}), GModel::oscillating()}) {
    EXPECT_LE(growth_bound_violation(g, xs, ss), 0.0) << g.kind;
    EXPECT_EQ(g.eval_G(xs[0], 0.0), 0.0) << g.kind;
    EXPECT_LE(antiderivative_mismatch(g, xs[1], ss), 1e-8) << g.kind;
  }
}

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

TEST(Mesh, QuadratureWeightsSumToDomainMeasure) {
  for (int order : {1, 2, 4, 7}) {
    const auto m1 = Mesh::interval(0.0, 1.0, 17, order);
    EXPECT_NEAR(m1.quadrature_weight_sum(), 1.0, 1e-12);
    const auto m2 = Mesh::rectangle(-1.0, 2.0, 0.0, 0.5, 5, 3, order);
    EXPECT_NEAR(m2.quadrature_weight_sum(), 1.5, 1e-12);
    for (double w : m2.reference_rule().weights) EXPECT_GT(w, 0.0);
  }
}

TEST(Mesh, BoundaryNodesCarryNoDofs) {
  const auto m = Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 4, 4);
  EXPECT_EQ(m.num_dofs(), 9);
  for (Index i = 0; i < m.num_nodes(); ++i) {
    const auto& x = m.node(i);
    const bool boundary = x.x() == 0.0 || x.x() == 1.0 || x.y() == 0.0 || x.y() == 1.0;
    EXPECT_EQ(boundary, m.dof_of_node(i) < 0);
  }
  for (Index c = 0; c < m.num_cells(); ++c) EXPECT_GT(m.cell_measure(c), 0.0);
}

TEST(Mesh, TriangleRuleIntegratesPolynomialsExactly) {
  // int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
  const auto rule = triangle_rule(6);
  auto fact = [](int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  for (int a = 0; a <= 3; ++a) {
    for (int b = 0; a + b <= 6 && b <= 3; ++b) {
      double s = 0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        s += rule.weights[q] * std::pow(rule.points[q].x(), a) * std::pow(rule.points[q].y(), b);
      }
      EXPECT_NEAR(s, fact(a) * fact(b) / fact(a + b + 2), 1e-14);
    }
  }
}

// ---------------------------------------------------------------------------
// assemble / eval
// ---------------------------------------------------------------------------

TEST(Assemble, ZeroStateHasZeroEnergy) {
  for (const auto& mesh : {Mesh::interval(0, 1, 9), Mesh::rectangle(0, 1, 0, 1, 4, 3)}) {
    const auto F = assemble(PsiModel::area_kappa(3.0, 1.0), GModel::zero(), mesh);
    EXPECT_EQ(F->value(Vector::Zero(F->dofs())), 0.0);
  }
}

TEST(Assemble, SingleHatAtZeroHasZeroGradient) {
  const auto F = assemble(PsiModel::area_kappa(3.0, 1.0), GModel::power(2.0, 3.0),
                          Mesh::interval(0, 1, 2));
  ASSERT_EQ(F->dofs(), 1);
  EXPECT_EQ(F->gradient(Vector::Zero(1))[0], 0.0);
}

TEST(Assemble, EmptyMeshIsRejected) {
  EXPECT_THROW(assemble(PsiModel::area_kappa(3.0, 1.0), GModel::zero(), Mesh::interval(0, 1, 1)),
               EmptySpace);
}

TEST(Assemble, DimensionMismatchIsInvalidInput) {
  const auto F = assemble(PsiModel::area_kappa(3.0, 1.0), GModel::zero(), Mesh::interval(0, 1, 4));
  EXPECT_THROW(F->value(Vector::Zero(5)), InvalidInput);
  EXPECT_THROW(F->gradient(Vector::Zero(2)), InvalidInput);
  EXPECT_THROW(F->hessian(Vector::Zero(1)), InvalidInput);
}

TEST(Assemble, EnergyMatchesAdaptiveQuadratureOracle) {
  const double p = 3.0;
  const auto mesh = Mesh::interval(0.0, 1.0, 3);
  const auto F = assemble(PsiModel::area_kappa(p, 1.0), GModel::zero(), mesh);
  const auto bump = [](double x) { return x * (1.0 - x); };
  const Vector u = mesh.interpolate([&](const Point& x) { return bump(x.x()); });

  // Oracle: integrate Psi_1 of the interpolant's slope panel by panel.
  double oracle = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double a = k / 3.0;
    const double b = (k + 1) / 3.0;
    const double slope = (bump(b) - bump(a)) / (b - a);
    auto integrand = [&](double) { return (std::pow(1.0 + slope * slope, p / 2) - 1.0) / p; };
    oracle += testing_support::adaptive_simpson(integrand, a, b, 1e-14);
  }
  EXPECT_NEAR(F->value(u), oracle, 1e-10);
}

TEST(Assemble, LinearNonlinearityHessianIsScaledStiffnessMinusMass) {
  const int elements = 12;
  const double h = 1.0 / elements;
  const double lambda = 7.5;
  for (double kappa : {1.0, 1.7}) {
    const double p = 3.0;
    const auto F = assemble(PsiModel::area_kappa(p, kappa), GModel::linear(lambda),
                            Mesh::interval(0.0, 1.0, elements));
    const Index n = F->dofs();
    // Independent 1D P1 stiffness (1/h)[-1 2 -1] and mass (h/6)[1 4 1].
    Matrix K = Matrix::Zero(n, n);
    Matrix M = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      K(i, i) = 2.0 / h;
      M(i, i) = 4.0 * h / 6.0;
      if (i + 1 < n) {
        K(i, i + 1) = K(i + 1, i) = -1.0 / h;
        M(i, i + 1) = M(i + 1, i) = h / 6.0;
      }
    }
    const Matrix expected = std::pow(kappa, p - 2.0) * K - lambda * M;
    EXPECT_LE((F->hessian(Vector::Zero(n)) - expected).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Assemble, ExplicitDoubleWellDerivatives) {
  const auto F = fixtures::double_well();
  Vector u(2);
  u << 1.0, 0.0;
  EXPECT_EQ(F->gradient(u).norm(), 0.0);
  const Matrix H = F->hessian(u);
  EXPECT_EQ(H(0, 0), 8.0);
  EXPECT_EQ(H(1, 1), 2.0);
  EXPECT_EQ(H(0, 1), 0.0);
}

struct BackendCase {
  std::string label;
  FunctionalPtr F;
  double scale;
};

std::vector<BackendCase> backend_cases() {
  return {
      {"galerkin-1d", assemble(PsiModel::area_kappa(3.0, 1.0),
                               GModel::power_sum({{3.0, 1.0}, {1.0, 2.5}}),
                               Mesh::interval(0.0, 1.0, 16)), 0.3},
      {"galerkin-1d-ppq", assemble(PsiModel::power_plus_quadratic(4.0), GModel::linear(20.0),
                                   Mesh::interval(-1.0, 1.0, 10)), 0.5},
      {"galerkin-2d", assemble(PsiModel::area_kappa(3.5, 0.8), GModel::power(2.0, 3.0),
                               Mesh::rectangle(0.0, 1.0, 0.0, 2.0, 4, 5)), 0.3},
      {"explicit-double-well", fixtures::double_well(), 1.5},
      {"explicit-truncated", build_truncated(6), 1.0},
  };
}

TEST(DerivativeConsistency, GradientMatchesCentralDifferences) {
  for (const auto& bc : backend_cases()) {
    NormalSampler rng(substream(11, "grad-fd-" + bc.label));
    for (int i = 0; i < 100; ++i) {
      const Vector u = bc.scale * rng.normal_vector(bc.F->dofs());
      const Vector v = rng.normal_vector(bc.F->dofs());
      const double rel = testing_support::gradient_fd_error(*bc.F, u, v);
      EXPECT_LE(rel, 1e-6) << bc.label << " sample " << i;
    }
  }
}

TEST(DerivativeConsistency, HessianMatchesGradientDifferences) {
  for (const auto& bc : backend_cases()) {
    NormalSampler rng(substream(13, "hess-fd-" + bc.label));
    for (int i = 0; i < 100; ++i) {
      const Vector u = bc.scale * rng.normal_vector(bc.F->dofs());
      const Vector v = rng.normal_vector(bc.F->dofs());
      const double rel = testing_support::hessian_fd_error(*bc.F, u, v);
      EXPECT_LE(rel, 1e-5) << bc.label << " sample " << i;
    }
  }
}

TEST(Assemble, HessianIsExactlySymmetric) {
  const auto F = assemble(PsiModel::area_kappa(3.0, 1.0), GModel::power(1.0, 3.0),
                          Mesh::rectangle(0, 1, 0, 1, 5, 5));
  NormalSampler rng(substream(1, "sym"));
  const Matrix H = F->hessian(rng.normal_vector(F->dofs()));
  EXPECT_EQ((H - H.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

// ---------------------------------------------------------------------------
// h_gram
// ---------------------------------------------------------------------------

TEST(HGram, SingleHatOnHalfMesh) {
  const auto F = assemble(PsiModel::area_kappa(3.0, 1.0), GModel::zero(), Mesh::interval(0, 1, 2));
  const Matrix G = F->h_gram(Vector::Zero(1));
  ASSERT_EQ(G.rows(), 1);
  EXPECT_NEAR(G(0, 0), 4.0, 1e-14);
}

TEST(HGram, AtZeroEqualsDirichletStiffness) {
  const auto mesh = Mesh::rectangle(0, 1, 0, 1, 4, 4);
  const auto F = assemble(PsiModel::area_kappa(3.0, 1.0), GModel::linear(3.0), mesh);
  // Independent stiffness: the 5-point stencil is what P1 on this diagonal
  // split produces, 4 on the diagonal and -1 for grid neighbours.
  const Index n = F->dofs();
  Matrix K = Matrix::Zero(n, n);
  for (Index d = 0; d < n; ++d) {
    const Point& xd = mesh.node(mesh.node_of_dof(d));
    K(d, d) = 4.0;
    for (Index e = 0; e < n; ++e) {
      const Point& xe = mesh.node(mesh.node_of_dof(e));
      if (std::abs((xd - xe).norm() - 0.25) < 1e-12) K(d, e) = -1.0;
    }
  }
  EXPECT_LE((F->h_gram(Vector::Zero(n)) - K).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HGram, ExplicitBackendIsIdentity) {
  const auto F = fixtures::double_well();
  EXPECT_EQ(F->h_gram(Vector::Zero(2)), Matrix::Identity(2, 2));
}

TEST(HGram, IndefiniteIntegrandReportsSmallestEigenvalue) {
  auto bad = PsiModel::make_custom(3.0, 1.0, 1.0, 1.0, [](const SmallVec& xi) {
    PsiDerivatives d;
    d.value = -0.5 * xi.squaredNorm();
    d.gradient = -xi;
    d.hessian = -SmallMat::Identity(xi.size(), xi.size());
    return d;
  });
  try {
    assemble(bad, GModel::zero(), Mesh::interval(0, 1, 4));
    FAIL() << "expected AssemblyError";
  } catch (const AssemblyError& e) {
    EXPECT_LT(e.smallest_eigenvalue(), 0.0);
  }
}

TEST(HGram, PositiveDefiniteAwayFromZero) {
  const auto F = assemble(PsiModel::area_kappa(3.0, 1.0), GModel::zero(),
                          Mesh::rectangle(0, 1, 0, 1, 6, 6));
  NormalSampler rng(substream(5, "gram-pd"));
  const Matrix G = F->h_gram(3.0 * rng.normal_vector(F->dofs()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  EXPECT_GT(es.eigenvalues()[0], 0.0);
}

// ---------------------------------------------------------------------------
// Exponents
// ---------------------------------------------------------------------------

TEST(Exponents, SobolevConjugateAndC2Threshold) {
  EXPECT_TRUE(std::isinf(sobolev_conjugate(3.0, 2)));
  EXPECT_TRUE(std::isinf(sobolev_conjugate(3.0, 3)));
  EXPECT_TRUE(std::isinf(critical_c2_exponent(3.0, 1)));
  EXPECT_DOUBLE_EQ(sobolev_conjugate(2.5, 3), 15.0);
  EXPECT_DOUBLE_EQ(critical_c2_exponent(2.5, 3), 10.0);
  for (int n = 3; n <= 8; ++n) {
    for (double p = 2.05; p < n; p += 0.1) {
      EXPECT_LT(critical_c2_exponent(p, n), sobolev_conjugate(p, n) - 2.0) << n << " " << p;
    }
  }
  const auto F = assemble(PsiModel::area_kappa(3.0, 1.0), GModel::zero(), Mesh::interval(0, 1, 4));
  EXPECT_TRUE(std::isinf(F->sobolev_conjugate()));
}

// ---------------------------------------------------------------------------
// Truncated sequence functional
// ---------------------------------------------------------------------------

TEST(Truncated, RejectsZeroOrder) { EXPECT_THROW(build_truncated(0), InvalidInput); }

TEST(Truncated, DerivativesMatchClosedForms) {
  const auto phi = build_truncated(8);
  NormalSampler rng(substream(2, "trunc"));
  for (int i = 0; i < 20; ++i) {
    const Vector v = rng.normal_vector(8);
    const Vector g = phi->gradient(v);
    const Matrix H = phi->hessian(v);
    for (int n = 1; n <= 8; ++n) {
      EXPECT_NEAR(g[n - 1], -std::sin(n * v[n - 1]) / (n * n * n), 1e-15);
      EXPECT_NEAR(H(n - 1, n - 1), -std::cos(n * v[n - 1]) / (n * n), 1e-15);
      const double h = 1e-5;
      Vector vp = v, vm = v;
      vp[n - 1] += h;
      vm[n - 1] -= h;
      EXPECT_NEAR((phi->value(vp) - phi->value(vm)) / (2 * h), g[n - 1], 1e-8);
    }
    EXPECT_EQ((H - Matrix(H.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Truncated, OriginIsCriticalWithNegativeDefiniteHessian) {
  const auto phi = build_truncated(5);
  EXPECT_EQ(phi->gradient(Vector::Zero(5)).norm(), 0.0);
  // Observed signature of the displayed functional at the origin.
  const Matrix H = phi->hessian(Vector::Zero(5));
  for (int n = 1; n <= 5; ++n) EXPECT_DOUBLE_EQ(H(n - 1, n - 1), -1.0 / (n * n));
}

TEST(Truncated, NearestNonzeroCriticalPoint) {
  for (int N : {1, 2, 5, 10, 20}) {
    const auto phi = build_truncated(N);
    const auto [v, dist] = phi->nearest_nonzero_critical();
    EXPECT_NEAR(dist, pi / N, 1e-15);
    EXPECT_NEAR(v.norm(), pi / N, 1e-15);
    EXPECT_LE(phi->gradient(v).norm(), 1e-12);
  }
  EXPECT_NEAR(build_truncated(1)->nearest_nonzero_critical().second, 3.14159, 1e-5);
  EXPECT_NEAR(build_truncated(10)->nearest_nonzero_critical().second, 0.31416, 1e-5);
}

TEST(Truncated, NearestNonzeroCriticalMatchesLatticeEnumeration) {
  // Every stationary point has v_n in (pi/n) Z; enumerate k_n in {-2..2}.
  for (int N : {1, 3, 5}) {
    const auto phi = build_truncated(N);
    double best = kInf;
    std::vector<int> k(N, -2);
    while (true) {
      Vector v(N);
      bool nonzero = false;
      for (int n = 1; n <= N; ++n) {
        v[n - 1] = k[n - 1] * pi / n;
        nonzero = nonzero || k[n - 1] != 0;
      }
      if (nonzero) {
        EXPECT_LE(phi->gradient(v).norm(), 1e-12);
        best = std::min(best, v.norm());
      }
      int pos = 0;
      while (pos < N && ++k[pos] > 2) k[pos++] = -2;
      if (pos == N) break;
    }
    EXPECT_NEAR(phi->nearest_nonzero_critical().second, best, 1e-14);
  }
}

TEST(Truncated, IsolationRadiusShrinksWithOrder) {
  double prev = kInf;
  for (int N = 1; N <= 40; ++N) {
    const double d = build_truncated(N)->nearest_nonzero_critical().second;
    EXPECT_LT(d, prev);
    prev = d;
  }
}

}  // namespace
}  // namespace morsehom
