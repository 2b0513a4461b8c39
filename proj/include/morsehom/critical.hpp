#pragma once

#include "morsehom/functional.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace morsehom {

/// A stationary coefficient vector of a discrete functional.
struct CriticalPoint {
  int id = -1;
  Vector coefficients;
  double value = 0.0;
  double residual = 0.0;  // Euclidean norm of the gradient
  int iterations = 0;
  std::optional<int> morse_index;
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  double armijo = 1e-4;
  double contraction = 0.5;
  int max_backtracks = 30;
};

namespace detail {

/// Solves H d = -g; returns nullopt when H is numerically singular.
inline std::optional<Vector> newton_direction(const Matrix& H, const Vector& g) {
  Eigen::FullPivLU<Matrix> lu(H);
  if (!lu.isInvertible()) return std::nullopt;
  Vector d = lu.solve(-g);
  if (!d.allFinite()) return std::nullopt;
  // Reject solves whose backward error is large relative to g.
  if ((H * d + g).norm() > 1e-6 * (g.norm() + 1e-300)) return std::nullopt;
  return d;
}

/// Backtracking on phi(t) = |r(u + t d)|^2 from t = 1. Returns the accepted
/// step length or nullopt when every trial fails the Armijo test.
template <class Residual>
std::optional<double> armijo_backtrack(Residual&& residual, const Vector& u, const Vector& d,
                                       double phi0, double slope, const NewtonOptions& opt) {
  double t = 1.0;
  for (int k = 0; k <= opt.max_backtracks; ++k) {
    const Vector trial = u + t * d;
    if (trial.allFinite()) {
      const Vector r = residual(trial);
      const double phi = r.squaredNorm();
      if (std::isfinite(phi) && phi <= phi0 + opt.armijo * t * slope) return t;
    }
    t *= opt.contraction;
  }
  return std::nullopt;
}

}  // namespace detail

/// Damped Newton iteration on the gradient with Armijo backtracking on
/// |grad|^2. A singular Newton system falls back to the merit-function descent
/// direction -H grad, then to shifted Newton steps.
inline CriticalPoint newton_refine(const DiscreteFunctional& F, const Vector& u0,
                                   const NewtonOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw InvalidInput("newton_refine: tol must be positive");
  Vector u = u0;
  Vector g = F.gradient(u);
  auto residual = [&F](const Vector& x) { return F.gradient(x); };
  for (int it = 0; it <= opt.max_iter; ++it) {
    const double gn = g.norm();
    if (gn <= opt.tol) {
      return CriticalPoint{-1, u, F.value(u), gn, it, std::nullopt};
    }
    if (it == opt.max_iter) break;
    const Matrix H = F.hessian(u);
    const double phi0 = g.squaredNorm();
    std::optional<double> step;
    Vector d;
    if (auto nd = detail::newton_direction(H, g)) {
      d = *nd;
      step = detail::armijo_backtrack(residual, u, d, phi0, -2.0 * phi0, opt);
    }
    if (!step) {
      d = -(H * g);
      const double slope = -2.0 * d.squaredNorm();
      if (d.norm() > 0.0) step = detail::armijo_backtrack(residual, u, d, phi0, slope, opt);
    }
    // Shifted systems (H + mu I) d = -g, accepting any decrease of |grad|^2.
    for (double mu = std::max(gn, 1e-8); !step && mu < 1e8 * (1.0 + gn); mu *= 10.0) {
      Matrix shifted = H;
      shifted.diagonal().array() += mu;
      if (auto nd = detail::newton_direction(shifted, g)) {
        d = *nd;
        step = detail::armijo_backtrack(residual, u, d, phi0, 0.0, opt);
        if (step && !(residual(u + *step * d).squaredNorm() < phi0)) step.reset();
      }
    }
    if (!step) {
      throw NoConvergence("newton_refine: stagnated with residual " + std::to_string(gn), u, it);
    }
    u += *step * d;
    g = F.gradient(u);
  }
  throw NoConvergence("newton_refine: maximum iterations exceeded (residual " +
                          std::to_string(g.norm()) + ")",
                      u, opt.max_iter);
}

struct DeflationOptions {
  NewtonOptions newton;
  double power = 1.0;
  double shift = 1.0;
  double merge_factor = 1e-6;  // merge radius = factor * (1 + |ubar|)
};

namespace detail {

/// m(u) = prod_k (1/|u - u_k|^power + shift) and grad log m(u).
struct Deflation {
  const std::vector<Vector>* known;
  double power;
  double shift;

  double factor(const Vector& u) const {
    double m = 1.0;
    for (const auto& uk : *known) m *= 1.0 / std::pow((u - uk).norm(), power) + shift;
    return m;
  }

  Vector grad_log(const Vector& u) const {
    Vector out = Vector::Zero(u.size());
    for (const auto& uk : *known) {
      const Vector diff = u - uk;
      const double r = diff.norm();
      const double rp = std::pow(r, power);
      // d/du log(r^-power + shift) = -power r^{-power-2} diff / (r^-power + shift)
      out += (-power / (rp * r * r)) / (1.0 / rp + shift) * diff;
    }
    return out;
  }
};

}  // namespace detail

/// Newton on the deflated residual m(u) grad F(u). Uses the Sherman-Morrison
/// form of the deflated step: d = d_N / (1 - grad(log m) . d_N).
inline std::optional<CriticalPoint> deflated_newton(const DiscreteFunctional& F,
                                                    const Vector& u0,
                                                    const std::vector<Vector>& known,
                                                    const DeflationOptions& opt) {
  const detail::Deflation defl{&known, opt.power, opt.shift};
  auto residual = [&](const Vector& x) -> Vector {
    for (const auto& uk : known) {
      if ((x - uk).norm() == 0.0) return Vector::Constant(x.size(), kInf);
    }
    return defl.factor(x) * F.gradient(x);
  };
  Vector u = u0;
  for (int it = 0; it < opt.newton.max_iter; ++it) {
    const Vector g = F.gradient(u);
    if (g.norm() <= opt.newton.tol) return CriticalPoint{-1, u, F.value(u), g.norm(), it, {}};
    const Vector r = residual(u);
    if (!r.allFinite()) return std::nullopt;
    const Matrix H = F.hessian(u);
    auto nd = detail::newton_direction(H, g);
    if (!nd) return std::nullopt;
    Vector d = *nd;
    if (!known.empty()) {
      const double denom = 1.0 - defl.grad_log(u).dot(d);
      if (!(std::abs(denom) > 1e-14)) return std::nullopt;
      d /= denom;
    }
    const double phi0 = r.squaredNorm();
    const auto step = detail::armijo_backtrack(residual, u, d, phi0, -2.0 * phi0, opt.newton);
    if (!step) return std::nullopt;
    u += *step * d;
    if (!u.allFinite() || u.norm() > 1e12) return std::nullopt;
  }
  return std::nullopt;
}

/// Critical points reachable from the seeds, deduplicated and sorted by value
/// (ties broken lexicographically on the coefficients). Each accepted point is
/// polished by undeflated Newton and re-checked against the tolerance.
inline std::vector<CriticalPoint> deflated_search(const DiscreteFunctional& F,
                                                  const std::vector<Vector>& seeds,
                                                  const DeflationOptions& opt = {}) {
  if (seeds.empty()) throw InvalidInput("deflated_search: empty seed list");
  std::vector<CriticalPoint> found;
  std::vector<Vector> known;
  auto is_known = [&](const Vector& u) {
    for (const auto& k : known) {
      if ((u - k).norm() <= opt.merge_factor * (1.0 + k.norm())) return true;
    }
    return false;
  };
  std::vector<const Vector*> tried;
  for (const auto& seed : seeds) {
    if (seed.size() != F.dofs()) throw InvalidInput("deflated_search: seed has wrong size");
    if (std::any_of(tried.begin(), tried.end(), [&](const Vector* t) { return *t == seed; })) {
      continue;
    }
    tried.push_back(&seed);
    std::optional<CriticalPoint> cp;
    if (F.gradient(seed).norm() <= opt.newton.tol) {
      cp = CriticalPoint{-1, seed, F.value(seed), F.gradient(seed).norm(), 0, {}};
    } else if (!is_known(seed)) {
      cp = deflated_newton(F, seed, known, opt);
    }
    if (!cp) continue;
    try {
      const int deflated_iterations = cp->iterations;
      *cp = newton_refine(F, cp->coefficients, opt.newton);
      cp->iterations += deflated_iterations;
    } catch (const NoConvergence&) {
      continue;
    }
    if (cp->residual > opt.newton.tol || is_known(cp->coefficients)) continue;
    known.push_back(cp->coefficients);
    found.push_back(*cp);
  }
  // Values are bucketed at roundoff scale so that numerically equal levels tie.
  double vmax = 0.0;
  for (const auto& cp : found) vmax = std::max(vmax, std::abs(cp.value));
  const double bucket = 1e-12 * (1.0 + vmax);
  std::sort(found.begin(), found.end(), [bucket](const CriticalPoint& a, const CriticalPoint& b) {
    const double ka = std::round(a.value / bucket);
    const double kb = std::round(b.value / bucket);
    if (ka != kb) return ka < kb;
    return std::lexicographical_compare(a.coefficients.begin(), a.coefficients.end(),
                                        b.coefficients.begin(), b.coefficients.end());
  });
  for (std::size_t i = 0; i < found.size(); ++i) found[i].id = static_cast<int>(i);
  return found;
}

/// Tensor grid of `count` points per axis on [lo, hi]^N.
inline std::vector<Vector> tensor_seed_grid(Index n, double lo, double hi, int count) {
  if (count < 1) throw InvalidInput("seed grid: count must be >= 1");
  double total = 1;
  for (Index i = 0; i < n; ++i) total *= count;
  if (total > 1e6) throw InvalidInput("seed grid: too many seeds for this dimension");
  std::vector<Vector> seeds;
  std::vector<int> idx(n, 0);
  auto coord = [&](int k) { return count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (count - 1); };
  while (true) {
    Vector s(n);
    for (Index i = 0; i < n; ++i) s[i] = coord(idx[i]);
    seeds.push_back(s);
    Index pos = 0;
    while (pos < n && ++idx[pos] == count) idx[pos++] = 0;
    if (pos == n) break;
  }
  return seeds;
}

/// Seeds a * I_h(prod_d sin(k_d pi (x_d - a_d) / L_d)) for amplitudes on
/// [lo, hi] and modes 1 <= k_d <= modes, plus the zero state.
inline std::vector<Vector> modal_seed_grid(const Mesh& mesh, double lo, double hi, int count,
                                           int modes) {
  if (count < 1 || modes < 1) throw InvalidInput("seed grid: count and modes must be >= 1");
  std::vector<Vector> seeds{Vector::Zero(mesh.num_dofs())};
  const auto& dom = mesh.domain();
  const int ky_max = mesh.dim() == 2 ? modes : 1;
  for (int kx = 1; kx <= modes; ++kx) {
    for (int ky = 1; ky <= ky_max; ++ky) {
      const Vector shape = mesh.interpolate([&](const Point& x) {
        double v = std::sin(kx * std::numbers::pi * (x.x() - dom[0]) / (dom[1] - dom[0]));
        if (mesh.dim() == 2) {
          v *= std::sin(ky * std::numbers::pi * (x.y() - dom[2]) / (dom[3] - dom[2]));
        }
        return v;
      });
      for (int j = 0; j < count; ++j) {
        const double a = count == 1 ? hi : lo + (hi - lo) * j / (count - 1);
        if (a != 0.0) seeds.push_back(a * shape);
      }
    }
  }
  return seeds;
}

}  // namespace morsehom
