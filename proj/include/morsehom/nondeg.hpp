#pragma once

#include "morsehom/spectral.hpp"

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace morsehom {

/// L = P- - P+: +id on X-, -id on X+.
class HyperbolicOperator {
 public:
  static HyperbolicOperator from_splitting(const Splitting& s) {
    if (s.null_count > 0) {
      std::ostringstream msg;
      msg << "hyperbolic operator: degenerate splitting, near-zero eigenvalues:";
      msg.precision(6);
      for (Index k : s.near_zero()) msg << ' ' << s.eigenvalues[k];
      throw RefusalError(msg.str());
    }
    return HyperbolicOperator(s.projector_minus, s.projector_plus, s.gram);
  }

  /// Builds L from arbitrary complementary projectors; the Gram matrix sets
  /// the norm used for sampling.
  static HyperbolicOperator from_projectors(Matrix minus, Matrix plus, Matrix gram) {
    if (minus.rows() != minus.cols() || plus.rows() != minus.rows() ||
        plus.cols() != minus.cols() || gram.rows() != minus.rows() ||
        gram.cols() != minus.cols()) {
      throw InvalidInput("hyperbolic operator: projector sizes disagree");
    }
    return HyperbolicOperator(std::move(minus), std::move(plus), std::move(gram));
  }

  Index dim() const { return L_.rows(); }
  const Matrix& matrix() const { return L_; }
  const Matrix& projector_minus() const { return minus_; }
  const Matrix& projector_plus() const { return plus_; }
  const Matrix& gram() const { return gram_; }

  Matrix exp(double t) const { return std::exp(t) * minus_ + std::exp(-t) * plus_; }

 private:
  HyperbolicOperator(Matrix minus, Matrix plus, Matrix gram)
      : minus_(std::move(minus)), plus_(std::move(plus)), gram_(std::move(gram)) {
    L_ = minus_ - plus_;
  }

  Matrix minus_;
  Matrix plus_;
  Matrix gram_;
  Matrix L_;
};

enum class Verdict { Pass, Fail };

inline std::string to_string(Verdict v) { return v == Verdict::Pass ? "pass" : "fail"; }

/// Sampled evidence for (or against) non-degeneracy on a ball of radius delta.
struct NondegCertificate {
  double delta = 0.0;
  double c = 0.0;
  double c1 = 0.0;
  int samples = 0;
  double worst_margin = 0.0;
  Verdict verdict = Verdict::Fail;
  std::optional<Vector> failure_witness;
  std::string note;

  bool passed() const { return verdict == Verdict::Pass; }
};

namespace detail {

/// Displacements h with |h|_gram on the radii delta * 2^-j (j = 0..4),
/// stratified over radius and over the angle between the P- component and its
/// complement.
inline std::vector<Vector> ball_samples(const Matrix& minus, const Matrix& gram, double delta,
                                        int n, std::uint64_t seed, std::string_view tag) {
  constexpr int kRadii = 5;
  constexpr int kAngles = 8;
  NormalSampler rng(substream(seed, tag));
  const Index dim = gram.rows();
  std::vector<Vector> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double radius = delta * std::ldexp(1.0, -(i % kRadii));
    const int stratum = (i / kRadii) % kAngles;
    const double theta = 0.5 * std::numbers::pi * (stratum + rng.uniform()) / kAngles;
    const Vector z = rng.normal_vector(dim);
    const Vector a = minus * z;
    const Vector b = z - a;
    const double na = gram_norm(gram, a);
    const double nb = gram_norm(gram, b);
    Vector h = z;
    if (na > 0.0 && nb > 0.0) h = std::cos(theta) * a / na + std::sin(theta) * b / nb;
    const double nh = gram_norm(gram, h);
    if (!(nh > 0.0)) {
      --i;
      continue;
    }
    out.push_back(h * (radius / nh));
  }
  return out;
}

}  // namespace detail

/// Checks dF(ubar + h)[L h] < 0 on sampled spheres around ubar.
inline NondegCertificate lyapunov_certificate(const DiscreteFunctional& F, const CriticalPoint& cp,
                                              const HyperbolicOperator& L, double delta,
                                              int n_samples, std::uint64_t seed) {
  if (!(delta > 0.0)) throw InvalidInput("lyapunov_certificate: delta must be positive");
  if (n_samples < 1) throw InvalidInput("lyapunov_certificate: need at least one sample");
  if (L.dim() != F.dofs()) throw InvalidInput("lyapunov_certificate: operator size mismatch");
  NondegCertificate cert;
  cert.delta = delta;
  cert.samples = n_samples;
  cert.worst_margin = kInf;
  double worst_m = -kInf;
  for (const Vector& h : detail::ball_samples(L.projector_minus(), L.gram(), delta, n_samples,
                                              seed, "lyapunov")) {
    const Vector u = cp.coefficients + h;
    const double m = F.gradient(u).dot(L.matrix() * h);
    const double hn2 = h.dot(L.gram() * h);
    cert.worst_margin = std::min(cert.worst_margin, -m / hn2);
    if (m > worst_m) {
      worst_m = m;
      if (!(m < 0.0)) cert.failure_witness = u;
    }
  }
  cert.verdict = worst_m < 0.0 ? Verdict::Pass : Verdict::Fail;
  if (cert.passed()) cert.failure_witness.reset();
  cert.note = "sampled evidence";
  return cert;
}

struct CriterionOptions {
  std::optional<double> c1;  // overrides half the smallest positive eigenvalue
  double slack = 1e-12;      // relative roundoff allowance in the X+ inequality
};

/// Splitting estimates on the delta-ball: -d2F(u)[v-, v-] >= 2c |v-|^2 and
/// d2F(u)[h+, h+] >= c1 |h+|^2 - c |h-|^2 at every sample u = ubar + h.
/// Null directions are treated as part of X+.
inline NondegCertificate criterion_check(const DiscreteFunctional& F, const CriticalPoint& cp,
                                         const Splitting& s, double delta, int n_samples,
                                         std::uint64_t seed, const CriterionOptions& opt = {}) {
  if (!(delta > 0.0)) throw InvalidInput("criterion_check: delta must be positive");
  if (n_samples < 1) throw InvalidInput("criterion_check: need at least one sample");
  if (s.dim() != F.dofs()) throw InvalidInput("criterion_check: splitting size mismatch");
  const Matrix& gram = s.gram;
  const Matrix& Pm = s.projector_minus;
  const Matrix Pp = Matrix::Identity(s.dim(), s.dim()) - Pm;
  const Matrix Vm = s.unstable_basis();
  const auto samples = detail::ball_samples(Pm, gram, delta, n_samples, seed, "criterion");

  NondegCertificate cert;
  cert.delta = delta;
  cert.samples = n_samples;
  cert.note = "sampled evidence";

  // (i) c from the smallest eigenvalue of -V-^T d2F(u) V- over the ball.
  double two_c = kInf;
  std::optional<Vector> c_witness;
  auto update_c = [&](const Vector& u) {
    if (Vm.cols() == 0) return;
    const Matrix block = -(Vm.transpose() * F.hessian(u) * Vm);
    const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (block + block.transpose()),
                                                            Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
    if (lo < two_c) {
      two_c = lo;
      c_witness = u;
    }
  };
  update_c(cp.coefficients);
  for (const Vector& h : samples) update_c(cp.coefficients + h);

  double smallest_positive = kInf;
  for (Index k = 0; k < s.dim(); ++k) {
    if (s.eigenvalues[k] > s.zero_tol) smallest_positive = std::min(smallest_positive, s.eigenvalues[k]);
  }
  if (Vm.cols() == 0) {
    cert.c1 = opt.c1.value_or(0.5 * smallest_positive);
    cert.c = cert.c1;
  } else {
    cert.c = 0.5 * two_c;
    cert.c1 = opt.c1.value_or(s.null_count > 0 ? cert.c : 0.5 * smallest_positive);
  }
  if (!(cert.c > 0.0) || !std::isfinite(cert.c1) || !(cert.c1 > 0.0)) {
    cert.verdict = Verdict::Fail;
    cert.worst_margin = std::isfinite(cert.c) ? std::min(cert.c, 0.0) : 0.0;
    cert.failure_witness = c_witness.value_or(cp.coefficients);
    return cert;
  }

  // (ii) the X+ inequality, normalized by |h|^2.
  double worst = kInf;
  for (const Vector& h : samples) {
    const Vector u = cp.coefficients + h;
    const Vector hp = Pp * h;
    const Vector hm = Pm * h;
    const double lhs = hp.dot(F.hessian(u) * hp);
    const double rhs = cert.c1 * hp.dot(gram * hp) - cert.c * hm.dot(gram * hm);
    const double scale = h.dot(gram * h);
    const double margin = (lhs - rhs) / scale;
    if (margin < worst) {
      worst = margin;
      if (margin < -opt.slack * (1.0 + std::abs(lhs / scale) + std::abs(rhs / scale))) {
        cert.failure_witness = u;
      }
    }
  }
  if (cert.failure_witness) {
    cert.verdict = Verdict::Fail;
    cert.worst_margin = std::min(worst, 0.0);
  } else {
    cert.verdict = Verdict::Pass;
    cert.worst_margin = std::min(cert.c, cert.c1);
  }
  return cert;
}

struct CertifyOptions {
  int samples = 1000;
  int max_halvings = 10;
  std::uint64_t seed = 0;
  CriterionOptions criterion;
};

struct CertifyResult {
  NondegCertificate criterion;
  NondegCertificate lyapunov;
  int halvings = 0;
  bool passed() const { return criterion.passed() && lyapunov.passed(); }
};

/// Radius search: delta starts at half the Gram distance to the nearest other
/// critical point and is halved until the criterion passes. Degenerate points
/// are refused.
inline CertifyResult certify(const DiscreteFunctional& F, const CriticalPoint& cp,
                             const Splitting& s, const std::vector<CriticalPoint>& others,
                             const CertifyOptions& opt = {}) {
  const HyperbolicOperator L = HyperbolicOperator::from_splitting(s);
  double nearest = kInf;
  for (const auto& o : others) {
    const double d = gram_norm(s.gram, o.coefficients - cp.coefficients);
    if (d > 0.0) nearest = std::min(nearest, d);
  }
  double delta = std::isfinite(nearest) ? 0.5 * nearest
                                        : 0.5 * (1.0 + gram_norm(s.gram, cp.coefficients));
  CertifyResult result;
  for (int k = 0; k <= opt.max_halvings; ++k, delta *= 0.5) {
    result.halvings = k;
    result.criterion = criterion_check(F, cp, s, delta, opt.samples, opt.seed, opt.criterion);
    if (result.criterion.passed()) break;
  }
  result.lyapunov = lyapunov_certificate(F, cp, L, result.criterion.delta, opt.samples, opt.seed);
  return result;
}

}  // namespace morsehom
