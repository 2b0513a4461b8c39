#pragma once

#include "morsehom/nondeg.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace morsehom {

/// Norm on coefficient vectors induced by an SPD metric M, with its dual norm
/// on gradients.
class MetricNorm {
 public:
  explicit MetricNorm(Matrix metric) : metric_(std::move(metric)), ldlt_(metric_) {
    if (ldlt_.info() != Eigen::Success || !ldlt_.isPositive()) {
      throw InvalidInput("metric must be symmetric positive definite");
    }
  }
  const Matrix& metric() const { return metric_; }
  double norm(const Vector& u) const { return gram_norm(metric_, u); }
  /// Riesz representative M^{-1} g.
  Vector raise(const Vector& g) const { return ldlt_.solve(g); }
  double dual(const Vector& g) const { return std::sqrt(std::max(0.0, g.dot(raise(g)))); }

 private:
  Matrix metric_;
  Eigen::LDLT<Matrix> ldlt_;
};

enum class BlendProfile { Smoothstep, Cosine, Exp };

inline std::string to_string(BlendProfile b) {
  switch (b) {
    case BlendProfile::Smoothstep: return "smoothstep";
    case BlendProfile::Cosine: return "cosine";
    case BlendProfile::Exp: return "exp";
  }
  return "?";
}

inline BlendProfile blend_profile_from_string(const std::string& s) {
  if (s == "smoothstep") return BlendProfile::Smoothstep;
  if (s == "cosine") return BlendProfile::Cosine;
  if (s == "exp") return BlendProfile::Exp;
  throw InvalidInput("unknown blend profile '" + s + "'");
}

/// Monotone cutoff with chi(0) = 0 and chi(1) = 1.
inline double blend(BlendProfile b, double s) {
  s = std::clamp(s, 0.0, 1.0);
  switch (b) {
    case BlendProfile::Smoothstep: return s * s * (3.0 - 2.0 * s);
    case BlendProfile::Cosine: return 0.5 * (1.0 - std::cos(std::numbers::pi * s));
    case BlendProfile::Exp: {
      auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
      const double a = psi(s);
      const double b2 = psi(1.0 - s);
      return a / (a + b2);
    }
  }
  return s;
}

/// Input for one critical neighborhood of the field.
struct FieldNode {
  CriticalPoint cp;
  HyperbolicOperator L;
  int morse_index = 0;
  double delta = 0.0;  // certified radius in the operator's Gram norm
};

/// Gradient-like field: L_i (x - ubar_i) inside rho_i / 2 of critical point i,
/// H-metric steepest descent outside rho_i, blended in between.
class FlowField {
 public:
  struct Local {
    CriticalPoint cp;
    HyperbolicOperator L;
    int morse_index;
    double rho;  // in the flow metric
  };

  FlowField(const DiscreteFunctional& F, std::vector<FieldNode> nodes,
            BlendProfile profile = BlendProfile::Smoothstep, int max_shrinks = 10)
      : F_(&F), norm_(F.flow_metric()), profile_(profile) {
    for (auto& n : nodes) {
      if (n.L.dim() != F.dofs() || n.cp.coefficients.size() != F.dofs()) {
        throw InvalidInput("flow field: node size mismatch");
      }
      if (!(n.delta > 0.0)) throw InvalidInput("flow field: node radius must be positive");
      // Largest M-ball inside the certified Gram ball.
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(norm_.metric(), n.L.gram(),
                                                          Eigen::EigenvaluesOnly);
      const double stretch = std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
      if (!(stretch > 0.0)) throw InvalidInput("flow field: degenerate metric comparison");
      locals_.push_back(Local{n.cp, n.L, n.morse_index, n.delta * stretch});
    }
    shrink_to_disjoint(max_shrinks);
  }

  const DiscreteFunctional& functional() const { return *F_; }
  const MetricNorm& norm() const { return norm_; }
  const std::vector<Local>& locals() const { return locals_; }
  BlendProfile profile() const { return profile_; }
  Index dim() const { return F_->dofs(); }

  /// Position of the local with critical point id `id`, or -1.
  int find(int id) const {
    for (std::size_t i = 0; i < locals_.size(); ++i) {
      if (locals_[i].cp.id == id) return static_cast<int>(i);
    }
    return -1;
  }

  Vector far_field(const Vector& z) const { return -norm_.raise(F_->gradient(z)); }

  /// Unnormalized field V(z); `distances` receives |z - ubar_i|_M if given.
  Vector operator()(const Vector& z, std::vector<double>* distances = nullptr) const {
    if (distances) distances->assign(locals_.size(), kInf);
    for (std::size_t i = 0; i < locals_.size(); ++i) {
      const Local& loc = locals_[i];
      const Vector h = z - loc.cp.coefficients;
      const double d = norm_.norm(h);
      if (distances) (*distances)[i] = d;
      if (d >= loc.rho) continue;
      // Neighborhoods are disjoint, so at most one local contributes; the
      // remaining distances are still filled for the caller.
      Vector v = loc.L.matrix() * h;
      if (d > 0.5 * loc.rho) {
        const double chi = blend(profile_, (loc.rho - d) / (0.5 * loc.rho));
        v = chi * v + (1.0 - chi) * far_field(z);
      }
      if (distances) {
        for (std::size_t j = i + 1; j < locals_.size(); ++j) {
          (*distances)[j] = norm_.norm(z - locals_[j].cp.coefficients);
        }
      }
      return v;
    }
    return far_field(z);
  }

  /// The integrated field V / sqrt(1 + |V|^2).
  Vector normalized(const Vector& z, std::vector<double>* distances = nullptr) const {
    const Vector v = (*this)(z, distances);
    return v / std::sqrt(1.0 + v.dot(norm_.metric() * v));
  }

 private:
  void shrink_to_disjoint(int max_shrinks) {
    for (int round = 0;; ++round) {
      bool overlap = false;
      for (std::size_t i = 0; i < locals_.size(); ++i) {
        for (std::size_t j = i + 1; j < locals_.size(); ++j) {
          const double d = norm_.norm(locals_[i].cp.coefficients - locals_[j].cp.coefficients);
          if (locals_[i].rho + locals_[j].rho >= d) {
            overlap = true;
            if (round < max_shrinks) {
              locals_[i].rho *= 0.5;
              locals_[j].rho *= 0.5;
            }
          }
        }
      }
      if (!overlap) return;
      if (round >= max_shrinks) {
        throw ConstructionError("flow field: critical neighborhoods still overlap after " +
                                std::to_string(max_shrinks) + " shrinks");
      }
    }
  }

  const DiscreteFunctional* F_;
  MetricNorm norm_;
  BlendProfile profile_;
  std::vector<Local> locals_;
};

/// Builds the field from certified critical points.
inline FlowField gradient_like_field(const DiscreteFunctional& F, std::vector<FieldNode> nodes,
                                     BlendProfile profile = BlendProfile::Smoothstep) {
  return FlowField(F, std::move(nodes), profile);
}

enum class Terminal { Converged, Escaped, Horizon };

inline std::string to_string(Terminal t) {
  switch (t) {
    case Terminal::Converged: return "converged";
    case Terminal::Escaped: return "escaped";
    case Terminal::Horizon: return "horizon";
  }
  return "?";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> f_values;
  std::vector<double> cerami;  // (1 + |u|) |dF(u)|_*
  Terminal terminal = Terminal::Horizon;
  int target = -1;  // critical point id when converged
  double cerami_min = kInf;
  /// Smallest |u - ubar_i|_M / rho_i seen along the path, per local.
  std::vector<double> closest_approach;

  std::size_t size() const { return states.size(); }
  const Vector& final_state() const { return states.back(); }
};

class IntegratorError : public NumericalError {
 public:
  IntegratorError(const std::string& what, Trajectory partial)
      : NumericalError(what), partial_(std::make_shared<Trajectory>(std::move(partial))) {}
  const Trajectory& partial() const { return *partial_; }

 private:
  std::shared_ptr<Trajectory> partial_;
};

struct IntegrateOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double escape_bound = 1e2;   // in the flow metric
  double capture_tol = 1e-6;   // gradient residual required for capture
  long max_steps = 200000;
  double initial_step = 1e-2;
};

namespace detail {

struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr std::array<double, 7> b{35.0 / 384,     0.0,           500.0 / 1113,
                                           125.0 / 192,    -2187.0 / 6784, 11.0 / 84,
                                           0.0};
  static constexpr std::array<double, 7> b_low{5179.0 / 57600,     0.0,
                                               7571.0 / 16695,     393.0 / 640,
                                               -92097.0 / 339200,  187.0 / 2100,
                                               1.0 / 40};
};

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of the normalized field.
inline Trajectory integrate(const FlowField& V, const Vector& u0, double horizon,
                            const IntegrateOptions& opt = {}) {
  if (!(horizon > 0.0)) throw InvalidInput("integrate: horizon must be positive");
  if (u0.size() != V.dim() || !u0.allFinite()) throw InvalidInput("integrate: bad initial state");
  const auto& F = V.functional();
  const auto& norm = V.norm();
  const auto& locals = V.locals();
  Trajectory traj;
  traj.closest_approach.assign(locals.size(), kInf);
  std::vector<double> dist;

  // Records a state and returns true when it terminates the trajectory.
  auto record = [&](double t, const Vector& u) {
    const Vector g = F.gradient(u);
    const double unorm = norm.norm(u);
    const double gdual = norm.dual(g);
    traj.times.push_back(t);
    traj.states.push_back(u);
    traj.f_values.push_back(F.value(u));
    traj.cerami.push_back((1.0 + unorm) * gdual);
    traj.cerami_min = std::min(traj.cerami_min, traj.cerami.back());
    for (std::size_t i = 0; i < locals.size(); ++i) {
      const double d = norm.norm(u - locals[i].cp.coefficients);
      traj.closest_approach[i] = std::min(traj.closest_approach[i], d / locals[i].rho);
      if (d < 0.25 * locals[i].rho && g.norm() < opt.capture_tol) {
        traj.terminal = Terminal::Converged;
        traj.target = locals[i].cp.id;
        return true;
      }
    }
    if (unorm > opt.escape_bound) {
      traj.terminal = Terminal::Escaped;
      return true;
    }
    return false;
  };

  using DP = detail::DormandPrince;
  double t = 0.0;
  Vector u = u0;
  if (record(t, u)) return traj;
  double h = std::min(opt.initial_step, horizon);
  std::array<Vector, 7> k;
  k[0] = V.normalized(u);
  for (long step = 0; step < opt.max_steps; ++step) {
    if (t >= horizon) break;
    h = std::min(h, horizon - t);
    if (h < 1e-14 * std::max(1.0, t)) {
      throw IntegratorError("integrate: step size underflow at t = " + std::to_string(t),
                            std::move(traj));
    }
    for (int s = 1; s < 7; ++s) {
      Vector y = u;
      for (int j = 0; j < s; ++j) {
        if (DP::a[s][j] != 0.0) y += h * DP::a[s][j] * k[j];
      }
      k[s] = V.normalized(y, &dist);
    }
    Vector next = u;
    Vector err = Vector::Zero(u.size());
    for (int s = 0; s < 7; ++s) {
      next += h * DP::b[s] * k[s];
      err += h * (DP::b[s] - DP::b_low[s]) * k[s];
    }
    const Vector scale =
        (opt.atol + opt.rtol * u.cwiseAbs().cwiseMax(next.cwiseAbs()).array()).matrix();
    const double e = std::sqrt((err.cwiseQuotient(scale)).squaredNorm() / u.size());
    if (!std::isfinite(e)) {
      h *= 0.2;
      continue;
    }
    if (e <= 1.0) {
      t += h;
      u = next;
      k[0] = k[6];  // first-same-as-last
      if (record(t, u)) return traj;
    }
    const double factor = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
    h *= factor;
  }
  traj.terminal = Terminal::Horizon;
  return traj;
}

/// min over the path of (1 + |u|) |dF(u)|_*, in the functional's flow metric.
inline double cerami_monitor(const DiscreteFunctional& F, const Trajectory& traj) {
  if (traj.states.empty()) throw InvalidInput("cerami_monitor: empty trajectory");
  const MetricNorm norm(F.flow_metric());
  double out = kInf;
  for (const auto& u : traj.states) {
    out = std::min(out, (1.0 + norm.norm(u)) * norm.dual(F.gradient(u)));
  }
  return out;
}

/// R = (r0 + (b - a) / (2 eps)) exp((b - a) / (2 eps)); an infinite eps gives r0.
inline double gronwall_radius(double r0, double epsilon, double a, double b) {
  if (!(r0 > 0.0)) throw InvalidInput("gronwall_radius: r0 must be positive");
  if (!(epsilon > 0.0)) throw InvalidInput("gronwall_radius: epsilon must be positive");
  if (!(b >= a)) throw InvalidInput("gronwall_radius: need b >= a");
  const double w = (b - a) / (2.0 * epsilon);
  return (r0 + w) * std::exp(w);
}

struct EpsilonEstimate {
  double epsilon = kInf;
  int band_hits = 0;     // samples with f in [a, b]
  int outside_hits = 0;  // ... that also lie outside B_r0
};

/// Sampled lower bound of (1 + |u|) |dF(u)|_* over f^{-1}([a, b]) minus B_r0.
/// Each sample is a random metric-unit direction scanned radially on a
/// geometric grid. A band that never leaves B_r0 yields epsilon = +inf.
inline EpsilonEstimate estimate_epsilon_detail(const DiscreteFunctional& F, double a, double b,
                                               double r0, int n_samples, std::uint64_t seed,
                                               double max_radius = 0.0) {
  if (!(b > a)) throw InvalidInput("estimate_epsilon: need b > a");
  if (!(r0 > 0.0)) throw InvalidInput("estimate_epsilon: r0 must be positive");
  if (n_samples < 1) throw InvalidInput("estimate_epsilon: need at least one sample");
  const MetricNorm norm(F.flow_metric());
  NormalSampler rng(substream(seed, "epsilon"));
  const double rmax = max_radius > 0.0 ? max_radius : 1e3 * (1.0 + r0);
  constexpr int kRadial = 200;
  const double rmin = 1e-3 * std::min(1.0, r0);
  EpsilonEstimate est;
  for (int i = 0; i < n_samples; ++i) {
    Vector w = rng.normal_vector(F.dofs());
    const double wn = norm.norm(w);
    if (!(wn > 0.0)) continue;
    w /= wn;
    for (int j = 0; j <= kRadial; ++j) {
      const double s = rmin * std::pow(rmax / rmin, static_cast<double>(j) / kRadial);
      const Vector u = s * w;
      const double f = F.value(u);
      if (!(f >= a && f <= b)) continue;
      ++est.band_hits;
      if (s < r0) continue;
      ++est.outside_hits;
      est.epsilon = std::min(est.epsilon, (1.0 + s) * norm.dual(F.gradient(u)));
    }
  }
  if (est.band_hits == 0) {
    throw EstimationError("estimate_epsilon: no sample landed in the band [" +
                          std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return est;
}

inline double estimate_epsilon(const DiscreteFunctional& F, double a, double b, double r0,
                               int n_samples, std::uint64_t seed) {
  return estimate_epsilon_detail(F, a, b, r0, n_samples, seed).epsilon;
}

struct CeramiReport {
  double r0 = 0.0;
  double epsilon = kInf;
  double a = 0.0;
  double b = 0.0;
  double R = 0.0;
  double empirical_max_norm = 0.0;
  int band_hits = 0;
  int outside_hits = 0;
  std::size_t confined_points = 0;  // points on band-confined segments
};

/// Largest flow-metric norm over trajectory states whose value lies in [a, b].
inline double band_max_norm(const FlowField& V, const std::vector<Trajectory>& trajs, double a,
                            double b) {
  double out = 0.0;
  for (const auto& tr : trajs) {
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (tr.f_values[i] >= a && tr.f_values[i] <= b) {
        out = std::max(out, V.norm().norm(tr.states[i]));
      }
    }
  }
  return out;
}

struct BandConfinement {
  double max_norm = 0.0;
  std::size_t points = 0;  // trajectory points the bound applies to
};

/// Norms on band-confined flow segments entered from the closed r0-ball: along
/// each trajectory, a point counts once the path has visited the ball and has
/// not left f^{-1}([a, b]) since. These are the segments the Gronwall radius
/// bounds.
inline BandConfinement band_confined_max_norm(const FlowField& V,
                                              const std::vector<Trajectory>& trajs, double a,
                                              double b, double r0) {
  BandConfinement out;
  for (const auto& tr : trajs) {
    bool armed = false;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (!(tr.f_values[i] >= a && tr.f_values[i] <= b)) {
        armed = false;
        continue;
      }
      const double n = V.norm().norm(tr.states[i]);
      if (n <= r0) armed = true;
      if (!armed) continue;
      ++out.points;
      out.max_norm = std::max(out.max_norm, n);
    }
  }
  return out;
}

inline CeramiReport cerami_report(const FlowField& V, double a, double b, double r0,
                                  int n_samples, std::uint64_t seed,
                                  const std::vector<Trajectory>& trajs) {
  const auto est = estimate_epsilon_detail(V.functional(), a, b, r0, n_samples, seed);
  CeramiReport rep;
  rep.r0 = r0;
  rep.a = a;
  rep.b = b;
  rep.epsilon = est.epsilon;
  rep.band_hits = est.band_hits;
  rep.outside_hits = est.outside_hits;
  rep.R = gronwall_radius(r0, est.epsilon, a, b);
  const BandConfinement bc = band_confined_max_norm(V, trajs, a, b, r0);
  rep.empirical_max_norm = bc.max_norm;
  rep.confined_points = bc.points;
  return rep;
}

// ---------------------------------------------------------------------------
// Shooting from unstable spheres
// ---------------------------------------------------------------------------

struct ShootOptions {
  int n_shoot = 16;
  double sphere_radius = 0.0;  // 0: a quarter of the neighborhood radius
  double horizon = 1e3;
  int refinements = 2;         // doublings of n_shoot when unresolved
  int bisection_steps = 40;
  std::uint64_t seed = 0;
  IntegrateOptions integrate;
};

/// Connecting orbits from one critical point to every critical point of
/// index one less.
struct ShootResult {
  int source = -1;
  int unstable_dim = 0;
  int n_shoot = 0;                 // samples used in the final pass
  std::map<int, int> counts;       // target id -> number of orbits
  bool reliable = true;
  std::string warning;
  std::vector<Trajectory> trajectories;  // sphere samples of the final pass
};

namespace detail {

/// Orthonormal basis (in the operator's Gram norm) of range(P-).
inline Matrix unstable_frame(const HyperbolicOperator& L, int dim) {
  if (dim == 0) return Matrix::Zero(L.dim(), 0);
  const Matrix& G = L.gram();
  // Eigenvectors of the Gram-symmetric form of P- with eigenvalue 1.
  const Matrix S = G * L.projector_minus();
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), G);
  Matrix frame = es.eigenvectors().rightCols(dim);
  for (Index j = 0; j < dim; ++j) frame.col(j) /= gram_norm(G, frame.col(j));
  // Deterministic orientation: largest-magnitude entry positive.
  for (Index j = 0; j < dim; ++j) {
    Index idx = 0;
    frame.col(j).cwiseAbs().maxCoeff(&idx);
    if (frame(idx, j) < 0.0) frame.col(j) *= -1.0;
  }
  return frame;
}

}  // namespace detail

class Shooter {
 public:
  Shooter(const FlowField& V, ShootOptions opt) : V_(V), opt_(std::move(opt)) {}

  ShootResult shoot(int source_id) const {
    const int si = V_.find(source_id);
    if (si < 0) throw InvalidInput("shoot: unknown critical point id " + std::to_string(source_id));
    const auto& src = V_.locals()[si];
    ShootResult res;
    res.source = source_id;
    res.unstable_dim = src.morse_index;
    if (src.morse_index == 0) return res;
    const Matrix frame = detail::unstable_frame(src.L, src.morse_index);
    const double r = radius(src);
    int n = std::max(2, opt_.n_shoot);
    for (int pass = 0; pass <= opt_.refinements; ++pass, n *= 2) {
      res = pass_once(source_id, src, frame, r, n);
      if (res.reliable) break;
    }
    return res;
  }

 private:
  double radius(const FlowField::Local& src) const {
    // Start inside the linear region; the Gram-norm sphere radius is clipped
    // to stay well within rho / 2 in the flow metric.
    const double r = opt_.sphere_radius > 0.0 ? opt_.sphere_radius : 0.25 * src.rho;
    return std::min(r, 0.25 * src.rho);
  }

  Vector start(const FlowField::Local& src, const Matrix& frame, double r,
               const Vector& coords) const {
    Vector dir = frame * coords;
    dir *= r / V_.norm().norm(dir);
    return src.cp.coefficients + dir;
  }

  Trajectory run(const Vector& u0) const {
    try {
      return integrate(V_, u0, opt_.horizon, opt_.integrate);
    } catch (const IntegratorError& e) {
      return e.partial();
    }
  }

  /// Index-(d-1) target a boundary trajectory pair is attributed to, or -1.
  int attribute(const Trajectory& lo, const Trajectory& hi, int d) const {
    const auto& locals = V_.locals();
    for (const Trajectory* t : {&lo, &hi}) {
      if (t->terminal == Terminal::Converged) {
        const int li = V_.find(t->target);
        if (locals[li].morse_index == d - 1) return t->target;
      }
    }
    int best = -1;
    double best_ratio = 1.0;  // must enter the neighborhood
    for (std::size_t i = 0; i < locals.size(); ++i) {
      if (locals[i].morse_index != d - 1) continue;
      const double ratio = std::min(lo.closest_approach[i], hi.closest_approach[i]);
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best = locals[i].cp.id;
      }
    }
    return best;
  }

  static int key(const Trajectory& t) {
    return t.terminal == Terminal::Converged ? t.target
                                             : (t.terminal == Terminal::Escaped ? -2 : -3);
  }

  ShootResult pass_once(int source_id, const FlowField::Local& src, const Matrix& frame, double r,
                        int n) const {
    ShootResult res;
    res.source = source_id;
    res.unstable_dim = src.morse_index;
    res.n_shoot = n;
    const int d = src.morse_index;
    auto direct = [&](const Trajectory& t) {
      if (t.terminal != Terminal::Converged) return;
      const int li = V_.find(t.target);
      if (V_.locals()[li].morse_index == d - 1) ++res.counts[t.target];
    };
    if (d == 1) {
      for (double sgn : {1.0, -1.0}) {
        res.trajectories.push_back(run(start(src, frame, r, Vector::Constant(1, sgn))));
        direct(res.trajectories.back());
        if (res.trajectories.back().terminal != Terminal::Converged) {
          res.reliable = false;
          res.warning = "unstable ray did not reach a critical point";
        }
      }
      return res;
    }
    if (d >= 3) {
      NormalSampler rng(substream(opt_.seed, "shoot-sphere", static_cast<std::uint64_t>(source_id)));
      for (int i = 0; i < n; ++i) {
        res.trajectories.push_back(run(start(src, frame, r, rng.normal_vector(d))));
        direct(res.trajectories.back());
      }
      res.reliable = false;
      res.warning = "component counting on spheres of dimension >= 2 is not supported";
      return res;
    }
    // d == 2: circle with a seeded angular offset.
    NormalSampler rng(substream(opt_.seed, "shoot-angle", static_cast<std::uint64_t>(source_id)));
    const double offset = rng.uniform();
    auto at_angle = [&](double th) {
      Vector c(2);
      c << std::cos(th), std::sin(th);
      return run(start(src, frame, r, c));
    };
    std::vector<double> angles(n);
    for (int i = 0; i < n; ++i) {
      angles[i] = 2.0 * std::numbers::pi * (i + offset) / n;
      res.trajectories.push_back(at_angle(angles[i]));
      direct(res.trajectories.back());
    }
    for (int i = 0; i < n; ++i) {
      const int j = (i + 1) % n;
      const Trajectory& ta = res.trajectories[i];
      const Trajectory& tb = res.trajectories[j];
      if (key(ta) == key(tb)) continue;
      const double th_b = j == 0 ? angles[0] + 2.0 * std::numbers::pi : angles[j];
      if (!bisect_arc(angles[i], th_b, ta, tb, d, res, at_angle, 0)) {
        res.reliable = false;
        res.warning = "an arc boundary could not be attributed to a critical point";
      }
    }
    return res;
  }

  template <class AtAngle>
  bool bisect_arc(double th_a, double th_b, Trajectory ta, Trajectory tb, int d, ShootResult& res,
                  AtAngle&& at_angle, int depth) const {
    for (int it = 0; it < opt_.bisection_steps; ++it) {
      const double mid = 0.5 * (th_a + th_b);
      Trajectory tm = at_angle(mid);
      if (tm.terminal == Terminal::Converged &&
          V_.locals()[V_.find(tm.target)].morse_index == d - 1) {
        ++res.counts[tm.target];
        return true;
      }
      if (key(tm) == key(ta)) {
        th_a = mid;
        ta = std::move(tm);
      } else if (key(tm) == key(tb)) {
        th_b = mid;
        tb = std::move(tm);
      } else {
        // A third terminal: two boundaries inside the arc.
        if (depth > 4) return false;
        return bisect_arc(th_a, mid, ta, tm, d, res, at_angle, depth + 1) &&
               bisect_arc(mid, th_b, tm, tb, d, res, at_angle, depth + 1);
      }
    }
    const int target = attribute(ta, tb, d);
    if (target < 0) return false;
    ++res.counts[target];
    return true;
  }

  const FlowField& V_;
  ShootOptions opt_;
};

struct OrbitCount {
  int count = 0;
  int parity = 0;
  bool reliable = true;
  std::string warning;
  int n_shoot = 0;
};

/// Number of connecting orbits from cp_hi to cp_lo (index difference one).
inline OrbitCount connecting_orbit_count(const FlowField& V, const CriticalPoint& cp_hi,
                                         const CriticalPoint& cp_lo, const ShootOptions& opt) {
  const int hi = V.find(cp_hi.id);
  const int lo = V.find(cp_lo.id);
  if (hi < 0 || lo < 0) throw InvalidInput("connecting_orbit_count: point not in the field");
  const int ih = V.locals()[hi].morse_index;
  const int il = V.locals()[lo].morse_index;
  if (ih != il + 1) {
    throw PreconditionViolation("connecting_orbit_count: index gap is " + std::to_string(ih - il) +
                                ", expected 1");
  }
  const ShootResult res = Shooter(V, opt).shoot(cp_hi.id);
  OrbitCount out;
  const auto it = res.counts.find(cp_lo.id);
  out.count = it == res.counts.end() ? 0 : it->second;
  out.parity = out.count % 2;
  out.reliable = res.reliable;
  out.warning = res.warning;
  out.n_shoot = res.n_shoot;
  return out;
}

}  // namespace morsehom
