#pragma once

#include "morsehom/common.hpp"
#include "morsehom/quadrature.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace morsehom {

/// The lower-order nonlinearity g(x, s), its s-derivative and its
/// antiderivative G(x, s) = int_0^s g(x, t) dt, plus the growth metadata the
/// diagnostics work from.
struct GModel {
  using Eval = std::function<double(const Point&, double)>;

  std::string kind = "custom";
  Eval g;
  Eval dg;  // d/ds g
  Eval G;

  double q = 0.0;  // |dg| <= c (1 + |s|^q)
  double c = 1.0;
  std::optional<double> lambda;  // g / (|s|^{p-2} s) -> lambda
  std::optional<double> alpha;   // G >= -alpha |s|^p
  std::optional<double> r;       // monotonicity threshold
  std::optional<double> ar_mu;   // Ambrosetti-Rabinowitz mu
  std::optional<double> ar_R;

  double eval_g(const Point& x, double s) const { return g(x, s); }
  double eval_dg(const Point& x, double s) const { return dg(x, s); }
  double eval_G(const Point& x, double s) const { return G(x, s); }

  static GModel zero() {
    GModel m;
    m.kind = "zero";
    m.g = [](const Point&, double) { return 0.0; };
    m.dg = [](const Point&, double) { return 0.0; };
    m.G = [](const Point&, double) { return 0.0; };
    m.q = 0.0;
    m.c = 1.0;
    return m;
  }

  /// g(s) = lambda s.
  static GModel linear(double lambda) {
    GModel m;
    m.kind = "linear";
    m.g = [lambda](const Point&, double s) { return lambda * s; };
    m.dg = [lambda](const Point&, double) { return lambda; };
    m.G = [lambda](const Point&, double s) { return 0.5 * lambda * s * s; };
    m.q = 0.0;
    m.c = std::max(std::abs(lambda), 1e-300);
    return m;
  }

  struct PowerTerm {
    double coeff;
    double exponent;  // g contains coeff |s|^{exponent-1} s
  };

  /// g(s) = sum_i a_i |s|^{m_i - 1} s, with m_i >= 1.
  static GModel power_sum(std::vector<PowerTerm> terms) {
    if (terms.empty()) throw InvalidInput("g: power-sum needs at least one term");
    double q = 0.0;
    double c = 0.0;
    for (const auto& t : terms) {
      if (!(t.exponent >= 1.0)) throw InvalidInput("g: power exponents must be >= 1");
      q = std::max(q, t.exponent - 1.0);
      c += std::abs(t.coeff) * t.exponent;
    }
    GModel m;
    m.kind = terms.size() == 1 ? "power" : "power-sum";
    m.g = [terms](const Point&, double s) {
      double v = 0.0;
      for (const auto& t : terms) v += t.coeff * std::pow(std::abs(s), t.exponent - 1.0) * s;
      return v;
    };
    m.dg = [terms](const Point&, double s) {
      double v = 0.0;
      for (const auto& t : terms) {
        v += t.coeff * t.exponent * std::pow(std::abs(s), t.exponent - 1.0);
      }
      return v;
    };
    m.G = [terms](const Point&, double s) {
      double v = 0.0;
      for (const auto& t : terms) {
        v += t.coeff * std::pow(std::abs(s), t.exponent + 1.0) / (t.exponent + 1.0);
      }
      return v;
    };
    m.q = q;
    m.c = std::max(c, 1e-300);
    return m;
  }

  static GModel power(double coeff, double exponent) {
    return power_sum({PowerTerm{coeff, exponent}});
  }

  /// g(s) = lambda |s|^{p-2} s, declared as exact (p-2)-growth with the given lambda.
  static GModel p_linear(double lambda, double p) {
    if (!(p >= 2.0)) throw InvalidInput("g: p-linear needs p >= 2");
    GModel m = power(lambda, p - 1.0);
    m.kind = "p-linear";
    m.lambda = lambda;
    return m;
  }

  /// g(s) = |s| s (2 + sin(log(1 + s^2))); G has no elementary closed form and
  /// is integrated by 16-point Gauss-Legendre on [0, s].
  static GModel oscillating();

  /// factor * g, with the growth metadata rescaled.
  GModel scaled(double factor) const {
    GModel m = *this;
    m.kind = kind + "*scaled";
    auto g0 = g;
    auto dg0 = dg;
    auto G0 = G;
    m.g = [g0, factor](const Point& x, double s) { return factor * g0(x, s); };
    m.dg = [dg0, factor](const Point& x, double s) { return factor * dg0(x, s); };
    m.G = [G0, factor](const Point& x, double s) { return factor * G0(x, s); };
    m.c = c * std::abs(factor);
    if (lambda) m.lambda = *lambda * factor;
    return m;
  }
};

inline GModel GModel::oscillating() {
  GModel m;
  m.kind = "oscillating";
  auto g = [](const Point&, double s) {
    return std::abs(s) * s * (2.0 + std::sin(std::log1p(s * s)));
  };
  m.g = g;
  m.dg = [](const Point&, double s) {
    const double a = std::abs(s);
    const double l = std::log1p(s * s);
    return 2.0 * a * (2.0 + std::sin(l)) + a * s * std::cos(l) * 2.0 * s / (1.0 + s * s);
  };
  const GaussRule rule = gauss_legendre(16);
  m.G = [g, rule](const Point& x, double s) {
    // Uniform panels on [0, s]; the panel count grows with log|s|.
    double total = 0.0;
    const int panels = 8 + static_cast<int>(4.0 * std::log1p(std::abs(s)));
    for (int k = 0; k < panels; ++k) {
      const double a = s * k / panels;
      const double b = s * (k + 1) / panels;
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        total += rule.weights[i] * half * g(x, mid + half * rule.nodes[i]);
      }
    }
    return total;
  };
  m.q = 1.0;
  m.c = 8.0;
  return m;
}

/// Largest violation of |dg(x, s)| <= c (1 + |s|^q) over the sample grid
/// (0 when the bound holds everywhere).
inline double growth_bound_violation(const GModel& g, const std::vector<Point>& xs,
                                     const std::vector<double>& ss) {
  double worst = 0.0;
  for (const auto& x : xs) {
    for (double s : ss) {
      const double bound = g.c * (1.0 + std::pow(std::abs(s), g.q));
      const double excess = std::abs(g.eval_dg(x, s)) - bound * (1.0 + 1e-12);
      worst = std::max(worst, excess / bound);
    }
  }
  return worst;
}

/// Max relative mismatch between a fourth-order central difference of G and g
/// at the sampled s values.
inline double antiderivative_mismatch(const GModel& g, const Point& x,
                                      const std::vector<double>& ss) {
  double worst = 0.0;
  for (double s : ss) {
    const double h = 1e-3 * (1.0 + std::abs(s));
    const double fd = (-g.eval_G(x, s + 2 * h) + 8 * g.eval_G(x, s + h) -
                       8 * g.eval_G(x, s - h) + g.eval_G(x, s - 2 * h)) /
                      (12 * h);
    const double ref = g.eval_g(x, s);
    worst = std::max(worst, std::abs(fd - ref) / (1.0 + std::abs(ref)));
  }
  return worst;
}

}  // namespace morsehom
