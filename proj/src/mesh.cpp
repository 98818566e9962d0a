#include "pqlap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pqlap {

Mesh::Mesh(double a, double b, Vector nodes) : a_(a), b_(b), nodes_(std::move(nodes)) {
  if (!(a_ < b_)) throw std::invalid_argument("Mesh: require a < b");
  if (nodes_.size() < 2) throw std::invalid_argument("Mesh: need at least one cell");
  if (nodes_[0] != a_ || nodes_[nodes_.size() - 1] != b_)
    throw std::invalid_argument("Mesh: end nodes must equal the interval endpoints");
  for (Index i = 0; i + 1 < nodes_.size(); ++i) {
    if (!(nodes_[i] < nodes_[i + 1])) throw std::invalid_argument("Mesh: nodes must be strictly increasing");
  }

  qp_coords_.resize(n_qp());
  qp_weights_.resize(n_qp());
  for (Index k = 0; k < n_cells(); ++k) {
    const double x0 = nodes_[k];
    const double h = cell_length(k);
    qp_coords_[2 * k] = x0 + kInner * h;
    qp_coords_[2 * k + 1] = x0 + kOuter * h;
    qp_weights_[2 * k] = 0.5 * h;
    qp_weights_[2 * k + 1] = 0.5 * h;
  }
}

Vector Mesh::sample_points() const {
  Vector pts(n_nodes() + n_qp());
  pts << nodes_, qp_coords_;
  return pts;
}

MeshPtr build_uniform_mesh(double a, double b, Index n_cells) {
  if (!(a < b)) throw std::invalid_argument("build_uniform_mesh: require a < b");
  if (n_cells < 1) throw std::invalid_argument("build_uniform_mesh: n_cells must be >= 1");
  Vector nodes(n_cells + 1);
  const double h = (b - a) / static_cast<double>(n_cells);
  for (Index i = 0; i <= n_cells; ++i) nodes[i] = a + h * static_cast<double>(i);
  nodes[n_cells] = b;
  return std::make_shared<const Mesh>(a, b, std::move(nodes));
}

GridFunction::GridFunction(MeshPtr mesh, Vector values) : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw std::invalid_argument("GridFunction: null mesh");
  if (values_.size() != mesh_->n_nodes()) {
    throw std::invalid_argument("GridFunction: expected " + std::to_string(mesh_->n_nodes()) + " values, got " +
                                std::to_string(values_.size()));
  }
}

GridFunction GridFunction::constant(MeshPtr mesh, double value) {
  const Index n = mesh->n_nodes();
  return GridFunction(std::move(mesh), Vector::Constant(n, value));
}

GridFunction GridFunction::sample(MeshPtr mesh, const std::function<double(double)>& fn) {
  Vector v = mesh->nodes().unaryExpr(fn);
  return GridFunction(std::move(mesh), std::move(v));
}

double GridFunction::operator()(double z) const {
  const Vector& x = mesh_->nodes();
  if (z <= x[0]) return values_[0];
  if (z >= x[x.size() - 1]) return values_[values_.size() - 1];
  const auto it = std::upper_bound(x.data(), x.data() + x.size(), z);
  const Index k = static_cast<Index>(it - x.data()) - 1;
  const double t = (z - x[k]) / (x[k + 1] - x[k]);
  return (1.0 - t) * values_[k] + t * values_[k + 1];
}

double sup_distance(const GridFunction& u, const GridFunction& v) {
  if (u.size() != v.size()) throw std::invalid_argument("sup_distance: size mismatch");
  return (u.values() - v.values()).cwiseAbs().maxCoeff();
}

double integrate_qp(const Mesh& mesh, const Eigen::Ref<const Vector>& integrand) {
  if (integrand.size() != mesh.n_qp()) {
    throw std::invalid_argument("integrate_qp: expected " + std::to_string(mesh.n_qp()) + " values, got " +
                                std::to_string(integrand.size()));
  }
  return mesh.qp_weights().dot(integrand);
}

Vector interpolate_qp(const Mesh& mesh, const Eigen::Ref<const Vector>& nodal) {
  if (nodal.size() != mesh.n_nodes()) throw std::invalid_argument("interpolate_qp: size mismatch");
  Vector out(mesh.n_qp());
  for (Index q = 0; q < mesh.n_qp(); ++q) {
    const Index k = q / 2;
    out[q] = Mesh::left_shape(q) * nodal[k] + Mesh::right_shape(q) * nodal[k + 1];
  }
  return out;
}

QpValues eval_with_gradient(const Mesh& mesh, const Eigen::Ref<const Vector>& nodal) {
  QpValues out{interpolate_qp(mesh, nodal), Vector(mesh.n_qp())};
  for (Index k = 0; k < mesh.n_cells(); ++k) {
    const double slope = (nodal[k + 1] - nodal[k]) / mesh.cell_length(k);
    out.derivative[2 * k] = slope;
    out.derivative[2 * k + 1] = slope;
  }
  return out;
}

QpValues eval_with_gradient(const GridFunction& u) { return eval_with_gradient(u.mesh(), u.values()); }

ConeReport cone_check(const GridFunction& u, double tol) {
  if (tol < 0.0) throw std::invalid_argument("cone_check: tol must be nonnegative");
  const double m = u.min();
  return {m >= -tol, m > tol, m};
}

}  // namespace pqlap
