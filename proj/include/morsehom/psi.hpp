#pragma once

#include "morsehom/common.hpp"

#include <algorithm>
#include <functional>
#include <string>

namespace morsehom {

enum class PsiKind { AreaKappa, PowerPlusQuadratic, Custom };

inline std::string to_string(PsiKind kind) {
  switch (kind) {
    case PsiKind::AreaKappa: return "area-kappa";
    case PsiKind::PowerPlusQuadratic: return "p-power-plus-quadratic";
    case PsiKind::Custom: return "custom";
  }
  return "unknown";
}

struct PsiDerivatives {
  double value = 0.0;
  SmallVec gradient;
  SmallMat hessian;
};

/// Closed forms of the reference integrand
///   Psi_kappa(xi) = ((kappa^2 + |xi|^2)^{p/2} - kappa^p) / p.
inline PsiDerivatives psi_kappa_derivatives(double p, double kappa, const SmallVec& xi) {
  const Index n = xi.size();
  const double s = kappa * kappa + xi.squaredNorm();
  PsiDerivatives out;
  out.value = (std::pow(s, 0.5 * p) - std::pow(kappa, p)) / p;
  const double a = std::pow(s, 0.5 * (p - 2.0));
  out.gradient = a * xi;
  const double b = (p - 2.0) * std::pow(s, 0.5 * (p - 4.0));
  out.hessian = a * SmallMat::Identity(n, n) + b * (xi * xi.transpose());
  return out;
}

/// Gradient-part integrand Psi together with the convexity sandwich constants
/// mu1 Psi_kappa'' <= Psi'' <= mu2 Psi_kappa''.
struct PsiModel {
  PsiKind kind = PsiKind::AreaKappa;
  double p = 3.0;
  double kappa = 1.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  std::function<PsiDerivatives(const SmallVec&)> custom;

  static PsiModel area_kappa(double p, double kappa) {
    PsiModel m;
    m.kind = PsiKind::AreaKappa;
    m.p = p;
    m.kappa = kappa;
    m.validate();
    return m;
  }

  /// Psi(xi) = |xi|^p / p + |xi|^2 / 2, compared against Psi_1.
  static PsiModel power_plus_quadratic(double p);

  static PsiModel make_custom(double p, double kappa, double mu1, double mu2,
                              std::function<PsiDerivatives(const SmallVec&)> eval) {
    PsiModel m;
    m.kind = PsiKind::Custom;
    m.p = p;
    m.kappa = kappa;
    m.mu1 = mu1;
    m.mu2 = mu2;
    m.custom = std::move(eval);
    m.validate();
    return m;
  }

  void validate() const {
    if (!(p > 2.0) || !std::isfinite(p)) {
      throw InvalidInput("psi: exponent must satisfy p > 2, got " + std::to_string(p));
    }
    if (!(kappa > 0.0)) throw InvalidInput("psi: kappa must be positive");
    if (!(mu1 > 0.0) || !(mu1 <= mu2)) {
      throw InvalidInput("psi: convexity constants must satisfy 0 < mu1 <= mu2");
    }
    if (kind == PsiKind::Custom && !custom) {
      throw InvalidInput("psi: custom kind requires an evaluator");
    }
  }
};

inline PsiDerivatives psi_derivatives(const PsiModel& model, const SmallVec& xi) {
  if (!xi.allFinite()) throw InvalidInput("psi_derivatives: non-finite gradient argument");
  switch (model.kind) {
    case PsiKind::AreaKappa:
      return psi_kappa_derivatives(model.p, model.kappa, xi);
    case PsiKind::PowerPlusQuadratic: {
      const Index n = xi.size();
      const double r2 = xi.squaredNorm();
      const double r = std::sqrt(r2);
      const double p = model.p;
      PsiDerivatives out;
      out.value = std::pow(r, p) / p + 0.5 * r2;
      const double a = std::pow(r, p - 2.0);
      out.gradient = (a + 1.0) * xi;
      out.hessian = (a + 1.0) * SmallMat::Identity(n, n);
      if (r > 0.0) {
        out.hessian += (p - 2.0) * std::pow(r, p - 4.0) * (xi * xi.transpose());
      }
      return out;
    }
    case PsiKind::Custom:
      return model.custom(xi);
  }
  throw InvalidInput("psi_derivatives: unknown kind");
}

// Radial and tangential eigenvalues of an isotropic Hessian at |xi| = r. Both
// built-in integrands are isotropic, so the sandwich reduces to ratios of these.
namespace detail {

inline std::pair<double, double> kappa_radial_tangential(double p, double kappa, double r) {
  const double s = kappa * kappa + r * r;
  const double tangential = std::pow(s, 0.5 * (p - 2.0));
  const double radial = tangential + (p - 2.0) * std::pow(s, 0.5 * (p - 4.0)) * r * r;
  return {radial, tangential};
}

inline std::pair<double, double> power_quadratic_radial_tangential(double p, double r) {
  const double a = std::pow(r, p - 2.0);
  return {(p - 1.0) * a + 1.0, a + 1.0};
}

}  // namespace detail

inline PsiModel PsiModel::power_plus_quadratic(double p) {
  PsiModel m;
  m.kind = PsiKind::PowerPlusQuadratic;
  m.p = p;
  m.kappa = 1.0;
  if (!(p > 2.0)) {
    throw InvalidInput("psi: exponent must satisfy p > 2, got " + std::to_string(p));
  }
  // Scan |xi| over 16 decades; the ratios tend to 1 at both ends.
  double lo = 1.0;
  double hi = 1.0;
  for (int i = 0; i <= 4000; ++i) {
    const double r = std::pow(10.0, -8.0 + 16.0 * i / 4000.0);
    const auto [kr, kt] = detail::kappa_radial_tangential(p, 1.0, r);
    const auto [pr, pt] = detail::power_quadratic_radial_tangential(p, r);
    lo = std::min({lo, pr / kr, pt / kt});
    hi = std::max({hi, pr / kr, pt / kt});
  }
  m.mu1 = lo * (1.0 - 1e-3);
  m.mu2 = hi * (1.0 + 1e-3);
  m.validate();
  return m;
}

/// Smallest eigenvalues of Psi''(xi) - mu1 Psi_kappa''(xi) and
/// mu2 Psi_kappa''(xi) - Psi''(xi); both are >= 0 when the sandwich holds at xi.
inline std::pair<double, double> sandwich_margins(const PsiModel& model, const SmallVec& xi) {
  const SmallMat h = psi_derivatives(model, xi).hessian;
  const SmallMat hk = psi_kappa_derivatives(model.p, model.kappa, xi).hessian;
  const SmallMat lower = h - model.mu1 * hk;
  const SmallMat upper = model.mu2 * hk - h;
  Eigen::SelfAdjointEigenSolver<SmallMat> el(lower, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<SmallMat> eu(upper, Eigen::EigenvaluesOnly);
  return {el.eigenvalues().minCoeff(), eu.eigenvalues().minCoeff()};
}

}  // namespace morsehom
