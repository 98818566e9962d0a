#pragma once

// Positive solution of the purely singular Neumann problem
//   V(u) = u^{-eta}
// reached through the regularized problems V(u) = (u + eps)^{-eta}, each
// solved as a fixed point of the frozen-source solution map
//   L_eps(g) = the unique u with V(u) = (g + eps)^{-eta}.

#include "pqlap/energy.hpp"
#include "pqlap/exponent_field.hpp"
#include "pqlap/mesh.hpp"

#include <optional>
#include <vector>

namespace pqlap {

struct RegularizationSchedule {
  std::vector<double> eps_values;  // strictly decreasing in (0, 1]
  double inner_tol = 1e-10;
  double fixed_point_tol = 1e-10;
  int max_outer = 200;

  /// eps_k = ratio^k for k = 0 .. levels-1.
  static RegularizationSchedule geometric(int levels = 21, double ratio = 0.5);
  void validate() const;
};

/// Unique solution of V(u) = (g + eps)^{-eta}; the problem is strictly convex.
SolveReport solve_auxiliary(const ExponentField& ef, const GridFunction& g, double eps, double tol,
                            std::optional<GridFunction> initial = std::nullopt);

/// Fixed point of L_eps by Picard iteration from u_init, with a Newton
/// fallback on the regularized residual when the iteration cycles.
SolveReport solve_regularized(const ExponentField& ef, double eps, const GridFunction& u_init,
                              const RegularizationSchedule& schedule);

struct SingularSolution {
  GridFunction u_bar;
  std::vector<double> eps_values;
  std::vector<GridFunction> per_eps_solutions;
  double monotonicity_violation = 0.0;  // largest nodal decrease as eps decreases
  double final_residual = 0.0;          // exact-mode residual of u_bar
  double limit_step = 0.0;              // sup distance from the last eps solution to u_bar
  bool converged = false;
  std::string message;
};

/// Runs the regularized solves along the schedule with warm starts, then
/// passes to the eps = 0 limit with an exact-mode Newton solve.
/// Throws std::invalid_argument when the exponent data fails validation.
SingularSolution solve_pure_singular(const ExponentField& ef, MeshPtr mesh, const RegularizationSchedule& schedule,
                                     std::optional<GridFunction> initial = std::nullopt);

}  // namespace pqlap
