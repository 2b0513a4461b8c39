#pragma once

#include "morsehom/common.hpp"

#include <vector>

namespace morsehom {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
/// Legendre recurrence, weights 2 v_0^2 from the normalized eigenvectors.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw InvalidInput("gauss_legendre: need at least one point");
  Matrix jacobi = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = 2.0 * v0 * v0;
  }
  // Symmetrize against eigen-solver round-off.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Reference-cell rule: points in barycentric-free reference coordinates and
/// weights summing to the reference measure (1 on [0,1], 1/2 on the unit
/// triangle).
struct ReferenceRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
};

/// Rule on [0, 1] exact for polynomials of degree <= order.
inline ReferenceRule interval_rule(int order) {
  const int n = std::max(1, (order + 2) / 2);
  const GaussRule g = gauss_legendre(n);
  ReferenceRule r;
  for (int i = 0; i < n; ++i) {
    r.points.emplace_back(0.5 * (g.nodes[i] + 1.0), 0.0);
    r.weights.push_back(0.5 * g.weights[i]);
  }
  return r;
}

/// Collapsed (Duffy) tensor rule on the triangle (0,0),(1,0),(0,1), exact for
/// polynomials of degree <= order. All weights are positive.
inline ReferenceRule triangle_rule(int order) {
  const int n = std::max(1, (order + 3) / 2);
  const GaussRule g = gauss_legendre(n);
  ReferenceRule r;
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (g.nodes[i] + 1.0);
    const double wu = 0.5 * g.weights[i];
    for (int j = 0; j < n; ++j) {
      const double v = 0.5 * (g.nodes[j] + 1.0);
      const double wv = 0.5 * g.weights[j];
      r.points.emplace_back(u, v * (1.0 - u));
      r.weights.push_back(wu * wv * (1.0 - u));
    }
  }
  return r;
}

}  // namespace morsehom
