#pragma once

#include "morsehom/functional.hpp"
#include "morsehom/nonlinearity.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace morsehom {

enum class GrowthTag { Sublinear, Linear, Superlinear, Unclassified };

inline std::string to_string(GrowthTag t) {
  switch (t) {
    case GrowthTag::Sublinear: return "sublinear";
    case GrowthTag::Linear: return "linear";
    case GrowthTag::Superlinear: return "superlinear";
    case GrowthTag::Unclassified: return "unclassified";
  }
  return "?";
}

struct GrowthClass {
  GrowthTag tag = GrowthTag::Unclassified;
  double q = 0.0;
  double p = 0.0;
  double threshold_low = 0.0;   // p - 2
  double threshold_high = 0.0;  // p* - 2
  std::optional<double> lambda;
  std::optional<bool> resonant;
  std::array<double, 3> ratios{};  // |dg| / |s|^{p-2} at s = 1e2, 1e3, 1e4
};

namespace detail {

struct ShootState {
  double u;
  double w;  // |u'|^{p-2} u'
};

/// Number of sign changes of u on (0, length) for
/// u' = |w|^{1/(p-1) - 1} w, w' = -lambda |u|^{p-2} u, u(0) = 0, u'(0) = 1.
inline int plaplace_zero_count(double p, double lambda, double length, double rtol) {
  const double inv = 1.0 / (p - 1.0);
  auto rhs = [&](const ShootState& y) {
    const double du = y.w == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(y.w), inv), y.w);
    const double dw = -lambda * std::copysign(std::pow(std::abs(y.u), p - 1.0), y.u);
    return ShootState{du, dw};
  };
  // Dormand-Prince 5(4) on a two-component system.
  static constexpr double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr double b[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                                  -2187.0 / 6784, 11.0 / 84, 0.0};
  static constexpr double bl[7] = {5179.0 / 57600, 0.0, 7571.0 / 16695, 393.0 / 640,
                                   -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
  ShootState y{0.0, 1.0};
  double x = 0.0;
  double h = 1e-4 * length;
  int zeros = 0;
  const double atol = 1e-3 * rtol;
  for (long step = 0; step < 10000000 && x < length; ++step) {
    h = std::min(h, length - x);
    std::array<ShootState, 7> k;
    k[0] = rhs(y);
    for (int s = 1; s < 7; ++s) {
      ShootState t = y;
      for (int j = 0; j < s; ++j) {
        t.u += h * a[s][j] * k[j].u;
        t.w += h * a[s][j] * k[j].w;
      }
      k[s] = rhs(t);
    }
    ShootState next = y;
    double eu = 0.0;
    double ew = 0.0;
    for (int s = 0; s < 7; ++s) {
      next.u += h * b[s] * k[s].u;
      next.w += h * b[s] * k[s].w;
      eu += h * (b[s] - bl[s]) * k[s].u;
      ew += h * (b[s] - bl[s]) * k[s].w;
    }
    const double su = atol + rtol * std::max(std::abs(y.u), std::abs(next.u));
    const double sw = atol + rtol * std::max(std::abs(y.w), std::abs(next.w));
    const double err = std::sqrt(0.5 * ((eu / su) * (eu / su) + (ew / sw) * (ew / sw)));
    if (err <= 1.0) {
      x += h;
      // A sign change inside the last step still lies strictly before length.
      if ((y.u > 0.0 && next.u < 0.0) || (y.u < 0.0 && next.u > 0.0) ||
          (y.u != 0.0 && next.u == 0.0 && x < length)) {
        ++zeros;
      }
      y = next;
    }
    h *= err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    if (h < 1e-16 * length) throw NumericalError("p-Laplacian shooting: step size underflow");
  }
  return zeros;
}

}  // namespace detail

/// First k_max Dirichlet eigenvalues of -Delta_p on (0, length). lambda_k is
/// the threshold where the shooting solution gains its k-th interior zero.
inline std::vector<double> plaplace_spectrum_1d(double p, double length, int k_max,
                                                double rtol = 1e-11) {
  if (!(p > 1.0)) throw InvalidInput("p-Laplacian spectrum: need p > 1");
  if (!(length > 0.0)) throw InvalidInput("p-Laplacian spectrum: need length > 0");
  if (k_max < 1) throw InvalidInput("p-Laplacian spectrum: need k_max >= 1");
  std::vector<double> out;
  double lo = 1e-12;
  for (int k = 1; k <= k_max; ++k) {
    // lambda > lambda_k iff the solution has at least k zeros in (0, length).
    double hi = std::max(2.0 * lo, 1.0);
    int expansions = 0;
    while (detail::plaplace_zero_count(p, hi, length, rtol) < k) {
      lo = hi;
      hi *= 2.0;
      if (++expansions > 200) {
        throw NumericalError("p-Laplacian spectrum: no bracket for k = " + std::to_string(k) +
                             " (last bracket [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "])");
      }
    }
    if (detail::plaplace_zero_count(p, lo, length, rtol) >= k) {
      throw NumericalError("p-Laplacian spectrum: bracket [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "] is inconsistent for k = " + std::to_string(k));
    }
    while (hi - lo > 1e-13 * hi) {
      const double mid = 0.5 * (lo + hi);
      if (detail::plaplace_zero_count(p, mid, length, rtol) >= k) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    out.push_back(0.5 * (lo + hi));
    lo = hi;
  }
  return out;
}

/// True when lambda lies within relative distance rel_tol of an eigenvalue.
inline bool is_resonant(double lambda, const std::vector<double>& spectrum, double rel_tol = 1e-3) {
  for (double mu : spectrum) {
    if (std::abs(lambda - mu) <= rel_tol * std::abs(mu)) return true;
  }
  return false;
}

/// Growth class from the declared metadata, confirmed by the ratio
/// |dg(x, s)| / |s|^{p-2} at s = 1e2, 1e3, 1e4. A declared linear class on a
/// one-dimensional domain of known length also gets a resonance flag.
inline GrowthClass classify_growth(const GModel& g, double p, int n,
                                   std::optional<double> length = {},
                                   const Point& x = Point::Zero()) {
  if (!(p > 2.0)) throw InvalidInput("classify_growth: requires p > 2");
  if (n < 1) throw InvalidInput("classify_growth: dimension must be >= 1");
  GrowthClass out;
  out.p = p;
  out.q = g.q;
  out.lambda = g.lambda;
  out.threshold_low = p - 2.0;
  out.threshold_high = sobolev_conjugate(p, n) - 2.0;
  if (g.lambda) {
    out.tag = GrowthTag::Linear;
  } else if (g.q < out.threshold_low) {
    out.tag = GrowthTag::Sublinear;
  } else if (g.q > out.threshold_low && g.q < out.threshold_high) {
    out.tag = GrowthTag::Superlinear;
  } else {
    out.tag = GrowthTag::Unclassified;
  }

  const std::array<double, 3> ss{1e2, 1e3, 1e4};
  for (int i = 0; i < 3; ++i) {
    const double d = std::max(std::abs(g.eval_dg(x, ss[i])), std::abs(g.eval_dg(x, -ss[i])));
    out.ratios[i] = d / std::pow(ss[i], p - 2.0);
  }
  const double r1 = out.ratios[0];
  const double r3 = out.ratios[2];
  const double rmax = std::max({out.ratios[0], out.ratios[1], out.ratios[2]});
  const double rmin = std::min({out.ratios[0], out.ratios[1], out.ratios[2]});
  bool consistent = true;
  switch (out.tag) {
    case GrowthTag::Sublinear: consistent = r3 <= r1; break;
    case GrowthTag::Linear: consistent = rmin > 0.0 && rmax <= 10.0 * rmin; break;
    case GrowthTag::Superlinear: consistent = r3 > r1; break;
    case GrowthTag::Unclassified: break;
  }
  if (!consistent) {
    throw ClassificationConflict("classify_growth: declared " + to_string(out.tag) +
                                 " growth disagrees with the ratio scan (" +
                                 std::to_string(out.ratios[0]) + ", " +
                                 std::to_string(out.ratios[1]) + ", " +
                                 std::to_string(out.ratios[2]) + ")");
  }
  if (out.tag == GrowthTag::Linear && length && n == 1) {
    out.resonant = is_resonant(*g.lambda, plaplace_spectrum_1d(p, *length, 10));
  }
  return out;
}

struct SuperlinearReport {
  bool monotonicity = false;
  bool lower_bound = false;
  bool ar_condition = false;
  bool ar_declared = false;
  double r = 1.0;
  double alpha = 0.0;
  std::vector<double> monotonicity_failures;  // grid points where the ratio drops
  double lower_bound_min = kInf;              // min of G + alpha |s|^p on the grid
};

/// Structural conditions for superlinear g on the grid |s| in [r, 1e4]
/// (1000 log-spaced points per sign).
inline SuperlinearReport superlinear_check(const GModel& g, double p,
                                           const Point& x = Point::Zero()) {
  if (!(p > 2.0)) throw InvalidInput("superlinear_check: requires p > 2");
  SuperlinearReport rep;
  rep.r = g.r.value_or(1.0);
  rep.alpha = g.alpha.value_or(0.0);
  if (!(rep.r > 0.0) || rep.r >= 1e4) throw InvalidInput("superlinear_check: need 0 < r < 1e4");
  constexpr int kGrid = 1000;
  std::vector<double> grid(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = rep.r * std::pow(1e4 / rep.r, static_cast<double>(i) / (kGrid - 1));
  }
  rep.monotonicity = true;
  rep.lower_bound = true;
  rep.ar_declared = g.ar_mu.has_value() && g.ar_R.has_value();
  rep.ar_condition = rep.ar_declared;
  for (double sign : {1.0, -1.0}) {
    double prev = -kInf;
    for (double a : grid) {
      const double s = sign * a;
      const double gs = g.eval_g(x, s);
      const double ratio = gs / (std::pow(a, p - 2.0) * s);
      if (ratio < prev - 1e-12 * std::abs(prev)) {
        rep.monotonicity = false;
        rep.monotonicity_failures.push_back(s);
      }
      prev = ratio;
      const double Gs = g.eval_G(x, s);
      const double lb = Gs + rep.alpha * std::pow(a, p);
      rep.lower_bound_min = std::min(rep.lower_bound_min, lb);
      if (lb < -1e-12 * (std::abs(Gs) + rep.alpha * std::pow(a, p))) rep.lower_bound = false;
      if (rep.ar_declared && a >= *g.ar_R) {
        const double muG = *g.ar_mu * Gs;
        const double gss = gs * s;
        if (!(muG > 0.0) || muG > gss + 1e-12 * std::abs(gss)) rep.ar_condition = false;
      }
    }
  }
  return rep;
}

}  // namespace morsehom
