#pragma once

#include "morsehom/common.hpp"
#include "morsehom/quadrature.hpp"

#include <array>
#include <string>
#include <vector>

namespace morsehom {

/// Conforming P1 mesh of an interval (n = 1) or an axis-aligned rectangle
/// split into triangles (n = 2). Boundary nodes carry no degree of freedom.
class Mesh {
 public:
  static Mesh interval(double a, double b, int elements, int quadrature_order = 4) {
    if (!(b > a)) throw InvalidInput("mesh: interval needs a < b");
    if (elements < 1) throw InvalidInput("mesh: need at least one element");
    Mesh m;
    m.dim_ = 1;
    m.domain_ = {a, b, 0.0, 0.0};
    m.order_ = quadrature_order;
    for (int i = 0; i <= elements; ++i) {
      const double x = (i == elements) ? b : a + (b - a) * i / elements;
      m.nodes_.emplace_back(x, 0.0);
    }
    for (int i = 0; i < elements; ++i) m.cells_.push_back({i, i + 1, -1});
    m.dof_of_node_.assign(m.nodes_.size(), -1);
    for (int i = 1; i < elements; ++i) m.add_dof(i);
    m.finalize();
    return m;
  }

  static Mesh rectangle(double x0, double x1, double y0, double y1, int nx, int ny,
                        int quadrature_order = 4) {
    if (!(x1 > x0) || !(y1 > y0)) throw InvalidInput("mesh: rectangle needs x0<x1, y0<y1");
    if (nx < 1 || ny < 1) throw InvalidInput("mesh: need at least one cell per axis");
    Mesh m;
    m.dim_ = 2;
    m.domain_ = {x0, x1, y0, y1};
    m.order_ = quadrature_order;
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        const double x = (i == nx) ? x1 : x0 + (x1 - x0) * i / nx;
        const double y = (j == ny) ? y1 : y0 + (y1 - y0) * j / ny;
        m.nodes_.emplace_back(x, y);
      }
    }
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        m.cells_.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        m.cells_.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    }
    m.dof_of_node_.assign(m.nodes_.size(), -1);
    for (int j = 1; j < ny; ++j) {
      for (int i = 1; i < nx; ++i) m.add_dof(id(i, j));
    }
    m.finalize();
    return m;
  }

  int dim() const { return dim_; }
  int quadrature_order() const { return order_; }
  const std::array<double, 4>& domain() const { return domain_; }
  double domain_measure() const {
    return dim_ == 1 ? domain_[1] - domain_[0]
                     : (domain_[1] - domain_[0]) * (domain_[3] - domain_[2]);
  }

  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
  Index num_cells() const { return static_cast<Index>(cells_.size()); }
  Index num_dofs() const { return static_cast<Index>(node_of_dof_.size()); }

  const Point& node(Index i) const { return nodes_[i]; }
  int dof_of_node(Index node) const { return dof_of_node_[node]; }
  Index node_of_dof(Index dof) const { return node_of_dof_[dof]; }
  int vertices_per_cell() const { return dim_ + 1; }
  int cell_vertex(Index cell, int local) const { return cells_[cell][local]; }

  double cell_measure(Index cell) const { return measure_[cell]; }

  /// Constant gradients of the cell's local basis, one column per vertex.
  const SmallMat& basis_gradients(Index cell) const { return basis_grad_[cell]; }

  const ReferenceRule& reference_rule() const { return rule_; }

  /// Local basis values at each reference quadrature point: values[q][a].
  const std::vector<std::array<double, 3>>& basis_at_quadrature() const { return basis_q_; }

  /// Physical quadrature point q of `cell`.
  Point quadrature_point(Index cell, std::size_t q) const {
    const auto& ref = rule_.points[q];
    const auto& c = cells_[cell];
    if (dim_ == 1) {
      const double a = nodes_[c[0]].x();
      const double b = nodes_[c[1]].x();
      return {a + (b - a) * ref.x(), 0.0};
    }
    const Point& p0 = nodes_[c[0]];
    return p0 + (nodes_[c[1]] - p0) * ref.x() + (nodes_[c[2]] - p0) * ref.y();
  }

  /// Physical weight of quadrature point q on `cell`.
  double quadrature_weight(Index cell, std::size_t q) const {
    return rule_.weights[q] * measure_[cell] * (dim_ == 1 ? 1.0 : 2.0);
  }

  double quadrature_weight_sum() const {
    double total = 0.0;
    for (Index c = 0; c < num_cells(); ++c) {
      for (std::size_t q = 0; q < rule_.weights.size(); ++q) total += quadrature_weight(c, q);
    }
    return total;
  }

  /// Coefficient vector of the nodal interpolant of `fn` (interior nodes only).
  template <class Fn>
  Vector interpolate(Fn&& fn) const {
    Vector u(num_dofs());
    for (Index d = 0; d < num_dofs(); ++d) u[d] = fn(nodes_[node_of_dof_[d]]);
    return u;
  }

 private:
  void add_dof(int node) {
    dof_of_node_[node] = static_cast<int>(node_of_dof_.size());
    node_of_dof_.push_back(node);
  }

  void finalize() {
    rule_ = dim_ == 1 ? interval_rule(order_) : triangle_rule(order_);
    basis_q_.clear();
    for (const auto& ref : rule_.points) {
      if (dim_ == 1) {
        basis_q_.push_back({1.0 - ref.x(), ref.x(), 0.0});
      } else {
        basis_q_.push_back({1.0 - ref.x() - ref.y(), ref.x(), ref.y()});
      }
    }
    measure_.clear();
    basis_grad_.clear();
    for (const auto& c : cells_) {
      if (dim_ == 1) {
        const double h = nodes_[c[1]].x() - nodes_[c[0]].x();
        if (!(h > 0.0)) throw InvalidInput("mesh: degenerate interval element");
        measure_.push_back(h);
        SmallMat g(1, 2);
        g << -1.0 / h, 1.0 / h;
        basis_grad_.push_back(g);
      } else {
        const Point e1 = nodes_[c[1]] - nodes_[c[0]];
        const Point e2 = nodes_[c[2]] - nodes_[c[0]];
        Eigen::Matrix2d jac;
        jac.col(0) = e1;
        jac.col(1) = e2;
        const double det = jac.determinant();
        if (!(det > 0.0)) throw InvalidInput("mesh: triangle with non-positive area");
        measure_.push_back(0.5 * det);
        // Reference gradients of (1 - xi - eta, xi, eta), mapped by J^{-T}.
        Eigen::Matrix<double, 2, 3> ref;
        ref << -1.0, 1.0, 0.0, -1.0, 0.0, 1.0;
        const Eigen::Matrix<double, 2, 3> phys = jac.transpose().inverse() * ref;
        basis_grad_.push_back(SmallMat(phys));
      }
    }
  }

  int dim_ = 1;
  int order_ = 4;
  std::array<double, 4> domain_{};
  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> cells_;
  std::vector<int> dof_of_node_;
  std::vector<Index> node_of_dof_;
  std::vector<double> measure_;
  std::vector<SmallMat> basis_grad_;
  ReferenceRule rule_;
  std::vector<std::array<double, 3>> basis_q_;
};

}  // namespace morsehom
