#pragma once

#include "morsehom/common.hpp"
#include "morsehom/mesh.hpp"
#include "morsehom/nonlinearity.hpp"
#include "morsehom/psi.hpp"

#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace morsehom {

/// p* = np/(n-p) for p < n, +inf otherwise.
inline double sobolev_conjugate(double p, int n) {
  if (p >= n) return kInf;
  return n * p / (n - p);
}

/// 2 p* / n: the growth threshold below which the lower-order part is C^2 on
/// the Hilbert extension.
inline double critical_c2_exponent(double p, int n) {
  const double ps = sobolev_conjugate(p, n);
  return std::isinf(ps) ? kInf : 2.0 * ps / n;
}

enum class Backend { Galerkin, Explicit };

inline std::string to_string(Backend b) {
  return b == Backend::Galerkin ? "galerkin" : "explicit";
}

/// Evaluatable objective on R^N: value, gradient, Hessian and the Gram matrix of
/// the H-metric at a base point. The public entry points validate sizes and
/// forward to the backend.
class DiscreteFunctional {
 public:
  virtual ~DiscreteFunctional() = default;

  virtual Backend backend() const = 0;
  virtual Index dofs() const = 0;
  virtual std::string name() const = 0;

  double value(const Vector& u) const {
    check(u, "value");
    return do_value(u);
  }
  Vector gradient(const Vector& u) const {
    check(u, "gradient");
    return do_gradient(u);
  }
  /// Exactly symmetric.
  Matrix hessian(const Vector& u) const {
    check(u, "hessian");
    Matrix h = do_hessian(u);
    return 0.5 * (h + h.transpose());
  }

  /// Gram matrix of <v, w>_H = int Psi''(grad ubar)[grad v, grad w]; throws
  /// AssemblyError when it fails to be positive definite.
  Matrix h_gram(const Vector& ubar) const {
    check(ubar, "h_gram");
    Matrix gram = do_h_gram(ubar);
    gram = 0.5 * (gram + gram.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const double smallest = es.eigenvalues()[0];
    if (!(smallest > 0.0)) {
      throw AssemblyError("h_gram: Gram matrix is not positive definite (smallest eigenvalue " +
                              std::to_string(smallest) + ")",
                          smallest);
    }
    return gram;
  }

  /// Fixed SPD metric used for flow norms and steepest descent.
  virtual Matrix flow_metric() const = 0;

  virtual double sobolev_conjugate() const { return kInf; }
  virtual double critical_c2_exponent() const { return kInf; }

 protected:
  virtual double do_value(const Vector& u) const = 0;
  virtual Vector do_gradient(const Vector& u) const = 0;
  virtual Matrix do_hessian(const Vector& u) const = 0;
  virtual Matrix do_h_gram(const Vector& ubar) const = 0;

 private:
  void check(const Vector& u, const char* what) const {
    if (u.size() != dofs()) {
      throw InvalidInput(std::string(what) + ": expected " + std::to_string(dofs()) +
                         " coefficients, got " + std::to_string(u.size()));
    }
    if (!u.allFinite()) throw InvalidInput(std::string(what) + ": non-finite coefficients");
  }
};

using FunctionalPtr = std::shared_ptr<const DiscreteFunctional>;

inline double eval_f(const DiscreteFunctional& F, const Vector& u) { return F.value(u); }
inline Vector eval_grad(const DiscreteFunctional& F, const Vector& u) { return F.gradient(u); }
inline Matrix eval_hess(const DiscreteFunctional& F, const Vector& u) { return F.hessian(u); }
inline Matrix h_gram(const DiscreteFunctional& F, const Vector& ubar) { return F.h_gram(ubar); }

// ---------------------------------------------------------------------------
// Galerkin backend
// ---------------------------------------------------------------------------

/// P1 discretization of f(u) = int Psi(grad u) - int G(x, u) with homogeneous
/// Dirichlet data. The gradient term is constant per cell and integrated
/// exactly; the G term uses the mesh quadrature.
class GalerkinFunctional final : public DiscreteFunctional {
 public:
  GalerkinFunctional(PsiModel psi, GModel g, Mesh mesh)
      : psi_(std::move(psi)), g_(std::move(g)), mesh_(std::move(mesh)) {
    psi_.validate();
    if (!g_.g || !g_.dg || !g_.G) throw InvalidInput("assemble: g model lacks evaluators");
    if (mesh_.num_dofs() == 0) {
      throw EmptySpace("assemble: mesh has no interior nodes, the discrete space is empty");
    }
    const int nv = mesh_.vertices_per_cell();
    for (Index c = 0; c < mesh_.num_cells(); ++c) {
      std::array<int, 3> l{-1, -1, -1};
      for (int a = 0; a < nv; ++a) l[a] = mesh_.dof_of_node(mesh_.cell_vertex(c, a));
      local_dofs_.push_back(l);
      std::vector<Point> pts;
      for (std::size_t q = 0; q < mesh_.reference_rule().weights.size(); ++q) {
        pts.push_back(mesh_.quadrature_point(c, q));
      }
      quad_points_.push_back(std::move(pts));
    }
    metric_ = h_gram(Vector::Zero(dofs()));
  }

  Backend backend() const override { return Backend::Galerkin; }
  Index dofs() const override { return mesh_.num_dofs(); }
  std::string name() const override { return "galerkin"; }

  const PsiModel& psi() const { return psi_; }
  const GModel& g() const { return g_; }
  const Mesh& mesh() const { return mesh_; }

  Matrix flow_metric() const override { return metric_; }
  double sobolev_conjugate() const override {
    return morsehom::sobolev_conjugate(psi_.p, mesh_.dim());
  }
  double critical_c2_exponent() const override {
    return morsehom::critical_c2_exponent(psi_.p, mesh_.dim());
  }

  /// Gradient of u on a cell.
  SmallVec cell_gradient(Index c, const Vector& u) const {
    const SmallMat& bg = mesh_.basis_gradients(c);
    SmallVec grad = SmallVec::Zero(mesh_.dim());
    for (int a = 0; a < mesh_.vertices_per_cell(); ++a) {
      const int d = local_dofs_[c][a];
      if (d >= 0) grad += u[d] * bg.col(a);
    }
    return grad;
  }

  double value_at_quadrature(Index c, std::size_t q, const Vector& u) const {
    const auto& phi = mesh_.basis_at_quadrature()[q];
    double v = 0.0;
    for (int a = 0; a < mesh_.vertices_per_cell(); ++a) {
      const int d = local_dofs_[c][a];
      if (d >= 0) v += u[d] * phi[a];
    }
    return v;
  }

 protected:
  double do_value(const Vector& u) const override {
    double total = 0.0;
    for (Index c = 0; c < mesh_.num_cells(); ++c) {
      total += mesh_.cell_measure(c) * psi_derivatives(psi_, cell_gradient(c, u)).value;
      for (std::size_t q = 0; q < quad_points_[c].size(); ++q) {
        total -= mesh_.quadrature_weight(c, q) *
                 g_.eval_G(quad_points_[c][q], value_at_quadrature(c, q, u));
      }
    }
    return total;
  }

  Vector do_gradient(const Vector& u) const override {
    Vector out = Vector::Zero(dofs());
    const int nv = mesh_.vertices_per_cell();
    for (Index c = 0; c < mesh_.num_cells(); ++c) {
      const SmallMat& bg = mesh_.basis_gradients(c);
      const SmallVec flux = psi_derivatives(psi_, cell_gradient(c, u)).gradient;
      const double m = mesh_.cell_measure(c);
      for (int a = 0; a < nv; ++a) {
        const int d = local_dofs_[c][a];
        if (d >= 0) out[d] += m * flux.dot(bg.col(a));
      }
      for (std::size_t q = 0; q < quad_points_[c].size(); ++q) {
        const double w = mesh_.quadrature_weight(c, q);
        const double gq = g_.eval_g(quad_points_[c][q], value_at_quadrature(c, q, u));
        const auto& phi = mesh_.basis_at_quadrature()[q];
        for (int a = 0; a < nv; ++a) {
          const int d = local_dofs_[c][a];
          if (d >= 0) out[d] -= w * gq * phi[a];
        }
      }
    }
    return out;
  }

  Matrix do_hessian(const Vector& u) const override {
    Matrix out = Matrix::Zero(dofs(), dofs());
    add_principal_part(u, out);
    const int nv = mesh_.vertices_per_cell();
    for (Index c = 0; c < mesh_.num_cells(); ++c) {
      for (std::size_t q = 0; q < quad_points_[c].size(); ++q) {
        const double w = mesh_.quadrature_weight(c, q);
        const double dgq = g_.eval_dg(quad_points_[c][q], value_at_quadrature(c, q, u));
        const auto& phi = mesh_.basis_at_quadrature()[q];
        for (int a = 0; a < nv; ++a) {
          const int da = local_dofs_[c][a];
          if (da < 0) continue;
          for (int b = 0; b < nv; ++b) {
            const int db = local_dofs_[c][b];
            if (db >= 0) out(da, db) -= w * dgq * phi[a] * phi[b];
          }
        }
      }
    }
    return out;
  }

  Matrix do_h_gram(const Vector& ubar) const override {
    Matrix out = Matrix::Zero(dofs(), dofs());
    add_principal_part(ubar, out);
    return out;
  }

 private:
  void add_principal_part(const Vector& u, Matrix& out) const {
    const int nv = mesh_.vertices_per_cell();
    for (Index c = 0; c < mesh_.num_cells(); ++c) {
      const SmallMat& bg = mesh_.basis_gradients(c);
      const SmallMat hess = psi_derivatives(psi_, cell_gradient(c, u)).hessian;
      const double m = mesh_.cell_measure(c);
      for (int a = 0; a < nv; ++a) {
        const int da = local_dofs_[c][a];
        if (da < 0) continue;
        const SmallVec ha = hess * bg.col(a);
        for (int b = 0; b < nv; ++b) {
          const int db = local_dofs_[c][b];
          if (db >= 0) out(da, db) += m * ha.dot(bg.col(b));
        }
      }
    }
  }

  PsiModel psi_;
  GModel g_;
  Mesh mesh_;
  std::vector<std::array<int, 3>> local_dofs_;
  std::vector<std::vector<Point>> quad_points_;
  Matrix metric_;
};

inline std::shared_ptr<GalerkinFunctional> assemble(PsiModel psi, GModel g, Mesh mesh) {
  return std::make_shared<GalerkinFunctional>(std::move(psi), std::move(g), std::move(mesh));
}

// ---------------------------------------------------------------------------
// Explicit backend
// ---------------------------------------------------------------------------

/// Finite-dimensional functional given by closed-form callbacks. The H-metric
/// is the identity unless a Gram matrix is supplied.
class ExplicitFunctional : public DiscreteFunctional {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;
  using HessFn = std::function<Matrix(const Vector&)>;

  ExplicitFunctional(std::string name, Index n, ValueFn f, GradFn g, HessFn h)
      : name_(std::move(name)), n_(n), f_(std::move(f)), g_(std::move(g)), h_(std::move(h)),
        gram_(Matrix::Identity(n, n)) {
    if (n < 1) throw EmptySpace("explicit functional needs at least one coordinate");
  }

  void set_gram(Matrix gram) {
    if (gram.rows() != n_ || gram.cols() != n_) throw InvalidInput("set_gram: wrong size");
    gram_ = std::move(gram);
  }

  Backend backend() const override { return Backend::Explicit; }
  Index dofs() const override { return n_; }
  std::string name() const override { return name_; }
  Matrix flow_metric() const override { return gram_; }

 protected:
  double do_value(const Vector& u) const override { return f_(u); }
  Vector do_gradient(const Vector& u) const override { return g_(u); }
  Matrix do_hessian(const Vector& u) const override { return h_(u); }
  Matrix do_h_gram(const Vector&) const override { return gram_; }

 private:
  std::string name_;
  Index n_;
  ValueFn f_;
  GradFn g_;
  HessFn h_;
  Matrix gram_;
};

/// phi(v) = sum_{n=1}^N cos(n v_n) / n^4 on R^N.
class TruncatedSequenceFunctional final : public ExplicitFunctional {
 public:
  explicit TruncatedSequenceFunctional(int order)
      : ExplicitFunctional("truncated-sequence", checked(order), value_fn, grad_fn, hess_fn),
        order_(order) {}

  int order() const { return order_; }

  /// Nonzero stationary point of minimal Euclidean norm and its norm.
  std::pair<Vector, double> nearest_nonzero_critical() const {
    // Coordinate n vanishes in its gradient exactly at multiples of pi/n, so
    // the smallest nonzero move is pi/n along the coordinate with largest n.
    Index best = 0;
    double best_dist = kInf;
    for (int n = 1; n <= order_; ++n) {
      const double d = std::numbers::pi / n;
      if (d < best_dist) {
        best_dist = d;
        best = n - 1;
      }
    }
    Vector v = Vector::Zero(order_);
    v[best] = best_dist;
    return {v, best_dist};
  }

 private:
  static Index checked(int order) {
    if (order < 1) throw InvalidInput("truncated sequence functional needs N >= 1");
    return order;
  }
  static double value_fn(const Vector& v) {
    double s = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
      const double n = static_cast<double>(i + 1);
      s += std::cos(n * v[i]) / (n * n * n * n);
    }
    return s;
  }
  static Vector grad_fn(const Vector& v) {
    Vector g(v.size());
    for (Index i = 0; i < v.size(); ++i) {
      const double n = static_cast<double>(i + 1);
      g[i] = -std::sin(n * v[i]) / (n * n * n);
    }
    return g;
  }
  static Matrix hess_fn(const Vector& v) {
    Matrix h = Matrix::Zero(v.size(), v.size());
    for (Index i = 0; i < v.size(); ++i) {
      const double n = static_cast<double>(i + 1);
      h(i, i) = -std::cos(n * v[i]) / (n * n);
    }
    return h;
  }

  int order_;
};

inline std::shared_ptr<TruncatedSequenceFunctional> build_truncated(int order) {
  return std::make_shared<TruncatedSequenceFunctional>(order);
}

/// Closed-form finite-dimensional test problems.
namespace fixtures {

/// (x^2 - 1)^2 + y^2: minima at (+-1, 0), saddle at the origin.
inline std::shared_ptr<ExplicitFunctional> double_well() {
  return std::make_shared<ExplicitFunctional>(
      "double-well", 2,
      [](const Vector& u) {
        const double a = u[0] * u[0] - 1.0;
        return a * a + u[1] * u[1];
      },
      [](const Vector& u) {
        Vector g(2);
        g << 4.0 * u[0] * (u[0] * u[0] - 1.0), 2.0 * u[1];
        return g;
      },
      [](const Vector& u) {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = 12.0 * u[0] * u[0] - 4.0;
        h(1, 1) = 2.0;
        return h;
      });
}

/// x^2 - y^2.
inline std::shared_ptr<ExplicitFunctional> saddle_quadratic() {
  return std::make_shared<ExplicitFunctional>(
      "saddle-quadratic", 2, [](const Vector& u) { return u[0] * u[0] - u[1] * u[1]; },
      [](const Vector& u) {
        Vector g(2);
        g << 2.0 * u[0], -2.0 * u[1];
        return g;
      },
      [](const Vector&) {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = 2.0;
        h(1, 1) = -2.0;
        return h;
      });
}

/// x^4 - y^2.
inline std::shared_ptr<ExplicitFunctional> quartic_saddle() {
  return std::make_shared<ExplicitFunctional>(
      "quartic-saddle", 2,
      [](const Vector& u) { return std::pow(u[0], 4) - u[1] * u[1]; },
      [](const Vector& u) {
        Vector g(2);
        g << 4.0 * std::pow(u[0], 3), -2.0 * u[1];
        return g;
      },
      [](const Vector& u) {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = 12.0 * u[0] * u[0];
        h(1, 1) = -2.0;
        return h;
      });
}

/// x^4 on R.
inline std::shared_ptr<ExplicitFunctional> quartic() {
  return std::make_shared<ExplicitFunctional>(
      "quartic", 1, [](const Vector& u) { return std::pow(u[0], 4); },
      [](const Vector& u) { return Vector::Constant(1, 4.0 * std::pow(u[0], 3)); },
      [](const Vector& u) { return Matrix::Constant(1, 1, 12.0 * u[0] * u[0]); });
}

/// x on R: no critical points.
inline std::shared_ptr<ExplicitFunctional> linear() {
  return std::make_shared<ExplicitFunctional>(
      "linear", 1, [](const Vector& u) { return u[0]; },
      [](const Vector&) { return Vector::Ones(1); },
      [](const Vector&) { return Matrix::Zero(1, 1); });
}

/// |u|^2 / 2 on R^n.
inline std::shared_ptr<ExplicitFunctional> quadratic(Index n = 1) {
  return std::make_shared<ExplicitFunctional>(
      "quadratic", n, [](const Vector& u) { return 0.5 * u.squaredNorm(); },
      [](const Vector& u) { return u; },
      [n](const Vector&) { return Matrix::Identity(n, n); });
}

}  // namespace fixtures

}  // namespace morsehom
