#include "pqlap/singular_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pqlap {

namespace {

double inner_tolerance(double tol) { return std::max(1e-2 * tol, 1e-14); }

void require_h0(const ExponentField& ef, const Mesh& mesh) {
  const ValidationReport rep = validate_h0_h1i(ef, mesh);
  if (!rep.h0_pass) {
    std::string msg = "exponent data violates:";
    for (const auto& v : rep.violations) msg += " " + v;
    throw std::invalid_argument(msg);
  }
}

double residual_inf(const EnergySpec& spec, const GridFunction& u) {
  try {
    return assemble_residual(spec, u).cwiseAbs().maxCoeff();
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

RegularizationSchedule RegularizationSchedule::geometric(int levels, double ratio) {
  RegularizationSchedule s;
  double eps = 1.0;
  for (int k = 0; k < levels; ++k, eps *= ratio) s.eps_values.push_back(eps);
  return s;
}

void RegularizationSchedule::validate() const {
  if (eps_values.empty()) throw std::invalid_argument("RegularizationSchedule: empty schedule");
  if (!(eps_values.front() <= 1.0)) throw std::invalid_argument("RegularizationSchedule: eps must be <= 1");
  for (std::size_t i = 0; i < eps_values.size(); ++i) {
    if (!(eps_values[i] > 0.0)) throw std::invalid_argument("RegularizationSchedule: eps must be positive");
    if (i > 0 && !(eps_values[i] < eps_values[i - 1]))
      throw std::invalid_argument("RegularizationSchedule: eps must be strictly decreasing");
  }
  if (!(inner_tol > 0.0) || !(fixed_point_tol > 0.0) || max_outer < 1)
    throw std::invalid_argument("RegularizationSchedule: tolerances must be positive");
}

SolveReport solve_auxiliary(const ExponentField& ef, const GridFunction& g, double eps, double tol,
                            std::optional<GridFunction> initial) {
  EnergySpec spec;
  spec.ef = ef;
  spec.singular = FrozenSingular{g, eps};
  const DiscreteEnergy energy(spec, g.mesh_ptr());
  const GridFunction start = initial ? *initial : GridFunction::constant(g.mesh_ptr(), 1.0);
  return minimize_energy(energy, start, NewtonOptions{tol, 200, 1e-8});
}

SolveReport solve_regularized(const ExponentField& ef, double eps, const GridFunction& u_init,
                              const RegularizationSchedule& schedule) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("solve_regularized: eps must lie in (0, 1]");
  if (u_init.min() < 0.0) throw std::invalid_argument("solve_regularized: u_init must be nonnegative");

  EnergySpec reg;
  reg.ef = ef;
  reg.singular = RegularizedSingular{eps};

  const MeshPtr& mesh = u_init.mesh_ptr();
  GridFunction u = u_init;
  double prev_step = std::numeric_limits<double>::infinity();
  int stalls = 0;
  const double inner = inner_tolerance(schedule.inner_tol);

  for (int k = 0; k < schedule.max_outer; ++k) {
    const GridFunction g(mesh, u.values().cwiseMax(0.0));
    SolveReport aux = solve_auxiliary(ef, g, eps, inner, u);
    if (!aux.converged()) {
      aux.message = "frozen solve failed at Picard step " + std::to_string(k) + ": " + aux.message;
      return aux;
    }
    const double step = sup_distance(aux.u, u);
    u = aux.u;
    if (step <= schedule.fixed_point_tol) {
      SolveReport out = aux;
      out.iterations = k + 1;
      out.residual_inf = residual_inf(reg, u);
      out.energy = energy_eval(reg, u);
      out.message = "picard";
      return out;
    }
    // L_eps is only guaranteed to have a fixed point, not to contract: watch
    // for steps that stop shrinking and hand over to Newton.
    stalls = step >= 0.999 * prev_step ? stalls + 1 : 0;
    prev_step = step;
    if (stalls >= 3) break;
  }

  SolveReport out = minimize_energy(DiscreteEnergy(reg, mesh), u, NewtonOptions{inner, 200, 1e-8});
  out.message = "newton fallback" + (out.message.empty() ? std::string() : ": " + out.message);
  return out;
}

SingularSolution solve_pure_singular(const ExponentField& ef, MeshPtr mesh, const RegularizationSchedule& schedule,
                                     std::optional<GridFunction> initial) {
  schedule.validate();
  require_h0(ef, *mesh);

  SingularSolution sol{initial ? *initial : GridFunction::constant(mesh, 1.0), {}, {}, 0.0, 0.0, 0.0, false, ""};
  GridFunction u = sol.u_bar;
  if (u.min() < 0.0) throw std::invalid_argument("solve_pure_singular: initial guess must be nonnegative");

  for (const double eps : schedule.eps_values) {
    SolveReport rep = solve_regularized(ef, eps, u, schedule);
    if (!rep.converged()) {
      sol.u_bar = rep.u;
      sol.message = "regularized solve failed at eps=" + std::to_string(eps) + ": " + rep.message;
      return sol;
    }
    if (!sol.per_eps_solutions.empty()) {
      const Vector drop = sol.per_eps_solutions.back().values() - rep.u.values();
      sol.monotonicity_violation = std::max(sol.monotonicity_violation, drop.maxCoeff());
    }
    sol.eps_values.push_back(eps);
    sol.per_eps_solutions.push_back(rep.u);
    u = rep.u;
  }

  // eps -> 0: the exact singular energy is strictly convex on the positive
  // cone and the last regularized solution lies below its minimizer.
  EnergySpec exact;
  exact.ef = ef;
  exact.singular = ExactSingular{};
  const SolveReport lim = minimize_energy(DiscreteEnergy(exact, mesh), u,
                                          NewtonOptions{inner_tolerance(schedule.inner_tol), 200, 1e-8});
  sol.u_bar = lim.u;
  sol.limit_step = sup_distance(lim.u, u);
  sol.monotonicity_violation = std::max(sol.monotonicity_violation, (u.values() - lim.u.values()).maxCoeff());
  sol.final_residual = residual_inf(exact, lim.u);
  sol.converged = lim.converged() && sol.final_residual <= schedule.inner_tol && lim.u.min() > 0.0;
  if (!sol.converged) sol.message = "exact-mode limit did not converge: " + lim.message;
  return sol;
}

}  // namespace pqlap
