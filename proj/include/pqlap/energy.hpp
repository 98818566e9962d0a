#pragma once

// Discrete energies of the anisotropic (p,q) operator
//   V(u) = -Delta_p u - Delta_q u + xi |u|^{p-2} u
// with the singular and parametric right-hand sides, their weak-form
// residuals and Jacobians, and Newton-type solvers built on them.

#include "pqlap/exponent_field.hpp"
#include "pqlap/mesh.hpp"
#include "pqlap/reaction.hpp"

#include <Eigen/SparseCore>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace pqlap {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Singular term evaluated where u <= 0.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Energy or residual overflowed.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NoSingular {};
struct ExactSingular {};  // rhs u^{-eta}
struct RegularizedSingular {
  double eps = 1.0;  // rhs (u+ + eps)^{-eta}
};
struct FrozenSingular {
  GridFunction g;  // rhs (g + eps)^{-eta}, independent of u
  double eps = 1.0;
};
using SingularMode = std::variant<NoSingular, ExactSingular, RegularizedSingular, FrozenSingular>;

/// x -> x^{-eta(z)} + lambda f(z, x) for x > 0.
struct RhsBase {
  ScalarField eta;
  std::optional<Reaction> reaction;
  double lambda = 0.0;

  double value(double z, double x) const;
  double slope(double z, double x) const;
  double primitive(double z, double x) const;  // x^{1-eta}/(1-eta) + lambda F
};

/// x -> base(z, clamp(x, lower(z), upper(z))); either bound may be absent.
struct TruncatedReaction {
  std::optional<GridFunction> lower;
  std::optional<GridFunction> upper;
  RhsBase base;

  double value(double z, double x) const;
};

/// Throws std::invalid_argument where lower > upper.
TruncatedReaction truncate_reaction(std::optional<GridFunction> lower, std::optional<GridFunction> upper,
                                    RhsBase base);

struct EnergySpec {
  ExponentField ef;
  std::optional<Reaction> reaction;  // contributes -lambda F(z, u+)
  double lambda = 0.0;
  SingularMode singular = NoSingular{};
  // Replaces the singular and reaction terms by the truncated right-hand side.
  std::optional<TruncatedReaction> truncation;
  // Extra potential shift |u|^p / p, used by the monotone iteration.
  double shift = 0.0;
  // Fixed source h(z) per quadrature point, contributing -h u.
  std::optional<Vector> source_qp;
};

/// EnergySpec bound to a mesh with every coefficient cached at the quadrature points.
class DiscreteEnergy {
 public:
  DiscreteEnergy(const EnergySpec& spec, MeshPtr mesh);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }

  double energy(const Vector& u) const;
  Vector residual(const Vector& u) const;
  SparseMatrix jacobian(const Vector& u, double delta = 1e-8) const;

  /// False when the residual would hit the singular term at a non-positive value.
  bool in_domain(const Vector& u) const;

 private:
  struct PointRhs {
    double primitive = 0.0;
    double value = 0.0;
    double slope = 0.0;
  };
  PointRhs rhs(Index q, double x, bool strict) const;
  double base_value(Index q, double x) const;
  double base_slope(Index q, double x) const;
  double base_primitive(Index q, double x) const;

  enum class Mode { none, exact, regularized, frozen, truncated };

  MeshPtr mesh_;
  Mode mode_ = Mode::none;
  double eps_ = 0.0;
  double lambda_ = 0.0;
  std::optional<Reaction> reaction_;
  Vector z_, w_, p_, q_, eta_, xi_, rexp_;
  Vector frozen_rhs_;
  Vector source_;
  bool has_lower_ = false;
  bool has_upper_ = false;
  Vector lower_, upper_;
  Vector lower_value_, lower_primitive_, upper_value_, upper_primitive_;
};

double energy_eval(const EnergySpec& spec, const GridFunction& u);
Vector assemble_residual(const EnergySpec& spec, const GridFunction& u);
SparseMatrix assemble_jacobian(const EnergySpec& spec, const GridFunction& u, double regularization_delta = 1e-8);

enum class SolveStatus { converged, max_iterations, line_search_failed, domain_error, non_finite };

const char* to_string(SolveStatus status);

struct SolveReport {
  GridFunction u;
  SolveStatus status = SolveStatus::max_iterations;
  double residual_inf = 0.0;
  double energy = 0.0;
  int iterations = 0;
  int gradient_steps = 0;
  std::string message;

  bool converged() const { return status == SolveStatus::converged; }
};

struct NewtonOptions {
  double tol = 1e-10;  // on the sup norm of the nodal residual
  int max_iter = 200;
  double delta = 1e-8;  // gradient smoothing inside the Jacobian only
};

/// Damped Newton with energy backtracking; gradient steps in the H^1 metric
/// when the Newton direction is unavailable or not a descent direction.
SolveReport minimize_energy(const DiscreteEnergy& energy, const GridFunction& u0, const NewtonOptions& opts = {});
SolveReport minimize_energy(const EnergySpec& spec, const GridFunction& u0, double tol, int max_iter);

/// Newton on the residual with a least-squares merit; converges to critical
/// points of any index (used to polish saddle points).
SolveReport newton_solve(const DiscreteEnergy& energy, const GridFunction& u0, const NewtonOptions& opts = {});

/// H^1 Riesz representative of a nodal residual: solves (K + M) g = r.
Vector sobolev_gradient(const Mesh& mesh, const Vector& residual);

/// Max error of assemble_residual against central differences of energy_eval,
/// relative to the residual's sup norm.
double gradient_check(const EnergySpec& spec, const GridFunction& u, double h);

}  // namespace pqlap
