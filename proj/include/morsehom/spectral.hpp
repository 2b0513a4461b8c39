#pragma once

#include "morsehom/critical.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace morsehom {

/// Splitting X = X- (+) X0 (+) X+ of the Hessian at a critical point, measured
/// in the metric h_gram(ubar). Eigenvectors are columns, Gram-orthonormal.
struct Splitting {
  Vector eigenvalues;
  Matrix eigenvectors;
  int morse_index = 0;
  int null_count = 0;
  Matrix projector_minus;
  Matrix projector_plus;
  double zero_tol = 0.0;
  Matrix gram;
  double max_residual = 0.0;  // largest Gram-norm eigen-residual

  Index dim() const { return eigenvalues.size(); }
  bool degenerate() const { return null_count > 0; }
  int co_index() const { return static_cast<int>(dim()) - morse_index - null_count; }

  /// Columns spanning X- (the first morse_index eigenvectors).
  Matrix unstable_basis() const { return eigenvectors.leftCols(morse_index); }

  /// Indices k with |mu_k| <= zero_tol.
  std::vector<Index> near_zero() const {
    std::vector<Index> out;
    for (Index k = 0; k < dim(); ++k) {
      if (std::abs(eigenvalues[k]) <= zero_tol) out.push_back(k);
    }
    return out;
  }
};

struct SplittingOptions {
  double rel_zero_tol = 1e-6;    // relative to max |mu_k|
  double residual_tol = 1e-8;    // required |grad F(ubar)|
  double eigen_residual_tol = 1e-8;
};

inline Splitting splitting(const DiscreteFunctional& F, const CriticalPoint& cp,
                           const SplittingOptions& opt = {}) {
  if (!(opt.rel_zero_tol >= 0.0)) throw InvalidInput("splitting: zero tolerance must be >= 0");
  const Vector& u = cp.coefficients;
  const double res = F.gradient(u).norm();
  if (!(res <= opt.residual_tol)) {
    throw PreconditionViolation("splitting: point is not critical (residual " +
                                std::to_string(res) + ")");
  }
  Splitting s;
  s.gram = F.h_gram(u);
  const Matrix A = F.hessian(u);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(A, s.gram);
  if (es.info() != Eigen::Success) {
    throw NumericalError("splitting: generalized eigensolver failed");
  }
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();
  if (!s.eigenvalues.allFinite() || !s.eigenvectors.allFinite()) {
    throw NumericalError("splitting: non-finite eigenpairs");
  }

  // Gram-norm residuals; a Cholesky-based solve can lose a few digits, so
  // polish each pair by one Rayleigh quotient update before checking.
  const Eigen::LDLT<Matrix> gram_ldlt(s.gram);
  for (Index k = 0; k < s.dim(); ++k) {
    auto x = s.eigenvectors.col(k);
    x /= gram_norm(s.gram, x);
    s.eigenvalues[k] = x.dot(A * x);
    const Vector r = A * x - s.eigenvalues[k] * (s.gram * x);
    // Gram-dual norm of the residual.
    const double rn = std::sqrt(std::max(0.0, r.dot(gram_ldlt.solve(r))));
    s.max_residual = std::max(s.max_residual, rn);
  }
  const double scale = s.dim() > 0 ? s.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  if (s.max_residual > opt.eigen_residual_tol * std::max(1.0, scale)) {
    throw NumericalError("splitting: eigen-residual " + std::to_string(s.max_residual) +
                         " exceeds tolerance");
  }

  s.zero_tol = opt.rel_zero_tol * scale;
  const Index n = s.dim();
  s.projector_minus = Matrix::Zero(n, n);
  s.projector_plus = Matrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const Vector x = s.eigenvectors.col(k);
    const Matrix rank1 = x * (s.gram * x).transpose();
    if (s.eigenvalues[k] < -s.zero_tol) {
      ++s.morse_index;
      s.projector_minus += rank1;
    } else if (s.eigenvalues[k] > s.zero_tol) {
      s.projector_plus += rank1;
    } else {
      ++s.null_count;
    }
  }
  return s;
}

inline int morse_index(const Splitting& s) { return s.morse_index; }

/// min_k |mu_k|; at or below zero_tol the Hessian is treated as non-injective.
inline double injectivity_margin(const Splitting& s) {
  return s.dim() == 0 ? kInf : s.eigenvalues.cwiseAbs().minCoeff();
}

/// Fraction of eigenvalues with |mu_k - 1| < window.
inline double accumulation_check(const Splitting& s, double window) {
  if (s.dim() == 0) return 0.0;
  const auto hits = ((s.eigenvalues.array() - 1.0).abs() < window).count();
  return static_cast<double>(hits) / static_cast<double>(s.dim());
}

}  // namespace morsehom
