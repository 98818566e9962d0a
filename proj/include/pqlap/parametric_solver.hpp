#pragma once

// Fixed-lambda solves of
//   V(u) = u^{-eta} + lambda f(z, u),  u > 0,
// on top of the singular solution u_bar: the minimal solution by shifted
// monotone iteration, and a second solution by a discrete mountain pass.

#include "pqlap/energy.hpp"
#include "pqlap/exponent_field.hpp"
#include "pqlap/mesh.hpp"
#include "pqlap/reaction.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pqlap {

struct LambdaProblem {
  ExponentField ef;
  Reaction reaction;
  double lambda = 0.0;
  GridFunction u_bar;
  double shift_xi_hat = 1.0;  // shift added on both sides of the monotone iteration
  double cap = 0.0;           // nodal value declaring divergence
  double tol = 1e-10;
  int max_iter = 100000;
  // Subsolution to start from instead of u_bar (clamped to >= u_bar).
  std::optional<GridFunction> start;

  void validate() const;
};

/// Fills cap = cap_factor * |u_bar|_inf and the smallest doubling shift
/// (1, 2, 4, ...) that makes the iteration map monotone on [min u_bar, cap].
LambdaProblem make_lambda_problem(const ExponentField& ef, const Reaction& reaction, double lambda,
                                  const GridFunction& u_bar, double tol = 1e-10, double cap_factor = 1e6);

/// Smallest xi_hat in {1, 2, 4, ...} such that
///   x -> x^{-eta(z)} + lambda f(z, x) + xi_hat x^{p(z)-1}
/// is nondecreasing on a geometric grid over [lo, hi] at every mesh node,
/// and f + xi_hat x^{p-1} passes shifted_monotone_probe on [0, hi].
double estimate_iteration_shift(const ExponentField& ef, const Reaction& reaction, double lambda, const Mesh& mesh,
                                double lo, double hi);

/// Exact-mode energy phi_lambda of the problem.
EnergySpec lambda_energy_spec(const LambdaProblem& prob);

/// Solution of V(u) = u_bar^{-eta} + 1.
SolveReport solve_upper_hat(const ExponentField& ef, const GridFunction& u_bar, double tol = 1e-10);

/// 1 / max_q f(z_q, u_hat(z_q)); +inf when f vanishes along u_hat.
double lambda0_estimate(const GridFunction& u_hat, const Reaction& reaction);

enum class IterationOutcome { converged, diverged, stalled };

const char* to_string(IterationOutcome outcome);

struct IterationReport {
  IterationOutcome outcome = IterationOutcome::stalled;
  GridFunction u;
  int iterations = 0;
  double last_step = 0.0;
  double residual_inf = 0.0;  // of the unshifted problem at u
  double energy = 0.0;        // phi_lambda(u); NaN once diverged
  double monotonicity_violation = 0.0;  // largest nodal decrease between iterates
  std::string message;

  bool converged() const { return outcome == IterationOutcome::converged; }
};

/// u_{k+1} solves V(u) + xi_hat |u|^{p-2} u = u_k^{-eta} + lambda f(z, u_k) + xi_hat u_k^{p-1}
/// starting from u_bar (or the clamped warm start). Throws std::runtime_error
/// when an inner solve fails below the cap.
IterationReport minimal_solution_iterate(const LambdaProblem& prob);

struct SolutionCheck {
  double residual_inf = 0.0;
  bool lower_bound_ok = false;  // u >= u_bar - slack
  bool positive_ok = false;     // u > 0 at every node

  bool passes(double tol) const { return residual_inf <= tol && lower_bound_ok && positive_ok; }
};

SolutionCheck verify_solution(const LambdaProblem& prob, const GridFunction& u, double slack = 1e-8);

struct MountainPassOptions {
  int n_path = 21;
  int max_sweeps = 2000;
  // Newton polishing is attempted once the max point's residual falls below this.
  double polish_threshold = 1e-3;
};

struct MountainPassReport {
  GridFunction u_hat;
  double m_level = 0.0;    // v_lambda(u_hat)
  double base_level = 0.0;  // v_lambda(u0)
  std::vector<double> path_energy_profile;
  double endpoint_scale = 0.0;  // e = endpoint_scale * 1
  int sweeps = 0;
  bool converged = false;
  std::string message;
};

/// Second solution above u0 for the functional truncated below at u0.
MountainPassReport mountain_pass(const LambdaProblem& prob, const GridFunction& u0,
                                 const MountainPassOptions& opts = {});

}  // namespace pqlap
