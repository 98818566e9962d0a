#pragma once

// One-dimensional P1 finite element substrate: uniform mesh, two-point Gauss
// quadrature, nodal grid functions and discrete positivity-cone checks.

#include <Eigen/Core>

#include <functional>
#include <memory>

namespace pqlap {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;

class Mesh {
 public:
  /// Nodes must be strictly increasing, start at a and end at b.
  Mesh(double a, double b, Vector nodes);

  double a() const { return a_; }
  double b() const { return b_; }
  Index n_cells() const { return nodes_.size() - 1; }
  Index n_nodes() const { return nodes_.size(); }
  Index n_qp() const { return 2 * n_cells(); }
  double length() const { return b_ - a_; }

  const Vector& nodes() const { return nodes_; }
  double cell_length(Index cell) const { return nodes_[cell + 1] - nodes_[cell]; }

  // Quadrature point q lives in cell q / 2.
  const Vector& qp_coords() const { return qp_coords_; }
  const Vector& qp_weights() const { return qp_weights_; }

  // Value of the left / right hat function of the owning cell at the local
  // Gauss point (q % 2).
  static double left_shape(Index q) { return q % 2 == 0 ? kOuter : kInner; }
  static double right_shape(Index q) { return q % 2 == 0 ? kInner : kOuter; }

  // Every point where coefficient data is read: nodes then quadrature points.
  Vector sample_points() const;

 private:
  static constexpr double kInner = 0.21132486540518711775;  // (1 - 1/sqrt 3) / 2
  static constexpr double kOuter = 0.78867513459481288225;  // (1 + 1/sqrt 3) / 2

  double a_;
  double b_;
  Vector nodes_;
  Vector qp_coords_;
  Vector qp_weights_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Uniform mesh on [a, b]; throws std::invalid_argument for a >= b or n_cells < 1.
MeshPtr build_uniform_mesh(double a, double b, Index n_cells);

/// Nodal values of a continuous piecewise-linear function.
class GridFunction {
 public:
  GridFunction(MeshPtr mesh, Vector values);

  static GridFunction constant(MeshPtr mesh, double value);
  static GridFunction sample(MeshPtr mesh, const std::function<double(double)>& fn);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const Vector& values() const { return values_; }
  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }

  /// Linear interpolation at an arbitrary z in [a, b].
  double operator()(double z) const;

  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }
  double sup_norm() const { return values_.cwiseAbs().maxCoeff(); }
  bool all_finite() const { return values_.allFinite(); }

 private:
  MeshPtr mesh_;
  Vector values_;
};

double sup_distance(const GridFunction& u, const GridFunction& v);

/// Sum of w_q * integrand_q. Throws on a length mismatch.
double integrate_qp(const Mesh& mesh, const Eigen::Ref<const Vector>& integrand);

struct QpValues {
  Vector value;       // u at each quadrature point
  Vector derivative;  // cell slope, repeated for both points of a cell
};

QpValues eval_with_gradient(const GridFunction& u);
QpValues eval_with_gradient(const Mesh& mesh, const Eigen::Ref<const Vector>& nodal);

/// Interpolates nodal values to the quadrature points.
Vector interpolate_qp(const Mesh& mesh, const Eigen::Ref<const Vector>& nodal);

struct ConeReport {
  bool nonnegative = false;
  bool interior_positive = false;
  double min_value = 0.0;
};

ConeReport cone_check(const GridFunction& u, double tol);

}  // namespace pqlap
