#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace morsehom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Fixed-capacity vector/matrix for gradients in R^n, n <= 3. No heap traffic
/// inside element loops.
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Spatial point; the second coordinate is unused in 1D.
using Point = Eigen::Vector2d;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class EmptySpace : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  AssemblyError(const std::string& what, double smallest_eigenvalue)
      : Error(what), smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, Vector last_iterate, int iterations)
      : Error(what), last_(std::move(last_iterate)), iterations_(iterations) {}
  const Vector& last_iterate() const { return last_; }
  int iterations() const { return iterations_; }

 private:
  Vector last_;
  int iterations_;
};

class RefusalError : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class IncompleteData : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  IntegrityError(const std::string& what, int upper_degree)
      : Error(what), upper_degree_(upper_degree) {}
  /// The composition d_{k-1} o d_k failing has k == upper_degree().
  int upper_degree() const { return upper_degree_; }

 private:
  int upper_degree_;
};

class ClassificationConflict : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic random substreams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Engine for the substream `tag` (optionally indexed) of a master seed. Two
/// different tags never share a state for the same seed.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index = 0) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(fnv1a(tag) + index)));
}

/// Standard normal draws via Box-Muller on top of the raw engine output, so
/// results do not depend on the standard library's distribution internals.
class NormalSampler {
 public:
  explicit NormalSampler(std::mt19937_64 engine) : engine_(std::move(engine)) {}

  double uniform() {
    // 53 random bits in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Norm helpers for an SPD Gram matrix
// ---------------------------------------------------------------------------

inline double gram_norm(const Matrix& gram, const Vector& v) {
  return std::sqrt(std::max(0.0, v.dot(gram * v)));
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace morsehom
