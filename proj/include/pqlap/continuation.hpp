#pragma once

// Sweeps in lambda: bisection for the critical parameter lambda*, the branch
// of minimal solutions lambda -> u_lambda*, and its structural diagnostics.

#include "pqlap/parametric_solver.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqlap {

/// Copy of the template at another lambda, with the iteration shift re-estimated
/// and any warm start dropped.
LambdaProblem problem_at(const LambdaProblem& tmpl, double lambda);

/// Converged minimal iteration whose limit passes verify_solution.
bool admissible(const LambdaProblem& prob, const IterationReport& rep);

struct LambdaBracket {
  double lo = 0.0;  // admissible
  double hi = 0.0;  // inadmissible
};

/// Thrown when the admissibility predicate contradicts the interval structure.
class NonMonotonePredicate : public std::runtime_error {
 public:
  NonMonotonePredicate(const std::string& what, std::array<double, 3> triple)
      : std::runtime_error(what), lambdas(triple) {}
  std::array<double, 3> lambdas;
};

struct LambdaStarResult {
  double estimate = 0.0;  // == bracket.lo
  LambdaBracket bracket;
  int evaluations = 0;
  std::optional<GridFunction> u_at_estimate;
};

/// Doubles hi until the iteration fails there. Throws std::runtime_error when
/// lo is not admissible or no failure is found within max_doublings.
LambdaBracket find_lambda_bracket(const LambdaProblem& tmpl, double lo, double hi, int max_doublings = 40);

/// Bisection on admissibility until hi - lo <= tol_lambda. Requires lo
/// admissible and hi inadmissible (std::invalid_argument otherwise).
LambdaStarResult bisect_lambda_star(const LambdaProblem& tmpl, double lo, double hi, double tol_lambda);

struct BranchPoint {
  double lambda = 0.0;
  bool admissible = false;
  IterationOutcome outcome = IterationOutcome::stalled;
  std::optional<GridFunction> u_star;
  std::optional<GridFunction> u_second;
  double energy = 0.0;
  double min_value = 0.0;
  double sup_value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::string message;
};

struct LeftContinuity {
  bool computed = false;
  double lambda_hat = 0.0;
  std::vector<int> k_values;
  std::vector<double> lambdas;    // lambda_hat (1 - 2^{-k})
  std::vector<double> distances;  // sup |u_{lambda_k} - u_{lambda_hat}|
  bool decreasing = false;
  double gap = 0.0;  // last distance
};

struct BranchDiagnostics {
  bool prefix_ok = true;                  // admissible points form a prefix
  std::vector<double> interleaved;        // admissible lambdas after the first failure
  double monotonicity_violation = 0.0;    // max nodal decrease between consecutive admissible points
  std::vector<double> mean_increments;    // mean nodal increase between consecutive admissible points
  LeftContinuity left;
};

struct BranchOptions {
  bool chain = true;  // warm start each point from the previous admissible one
  unsigned jobs = 1;  // worker threads; only used when chain is false
  bool second_solutions = false;
  MountainPassOptions mountain;
  bool estimate_lambda_star = true;
  double tol_lambda = 1e-4;
  bool left_continuity = true;
  int left_k_min = 3;
  int left_k_max = 40;
  double left_target = 1e-8;  // the probe stops once a distance falls below this (after k_min + 5)
};

struct Branch {
  std::vector<BranchPoint> points;
  std::optional<double> lambda_star_estimate;
  std::optional<LambdaBracket> lambda_star_bracket;
  BranchDiagnostics diagnostics;
};

/// Per-point failures are recorded in the point; the sweep never aborts.
Branch build_branch(const LambdaProblem& tmpl, std::vector<double> lambda_values, const BranchOptions& opts = {});

}  // namespace pqlap
