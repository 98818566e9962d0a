#include "pqlap/parametric_solver.hpp"
#include "pqlap/singular_solver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pqlap;

namespace {

const ExponentField kBench = ExponentField::constant(3, 2, 0.5, 1, 5);
const Reaction kF1 = Reaction::power(make_field(ConstantField{5.0}));

// Roots of u^2 = u^{-1/2} + 0.1 u^4 (mpmath, 30 digits).
constexpr double kMinimalRoot = 1.0475974554854045;
constexpr double kSecondRoot = 3.0646000184009577;

double max_dev(const GridFunction& u, double c) { return (u.values().array() - c).abs().maxCoeff(); }

LambdaProblem bench_problem(double lambda, Index cells = 200) {
  const MeshPtr m = build_uniform_mesh(0.0, 1.0, cells);
  return make_lambda_problem(kBench, kF1, lambda, GridFunction::constant(m, 1.0));
}

ExponentField variable_field() {
  ExponentField ef = kBench;
  ef.xi = make_field(AffineField{1.0, 1.0});
  ef.eta = make_field(AffineField{0.3, 0.4});
  ef.p = make_field(SinusoidField{3.0, 0.2, 1.0});
  return ef;
}

}  // namespace

TEST(ScalarOracle, BenchmarkRoots) {
  const auto gap = [](double u) { return oracle::benchmark_gap(u, 1.0, 3.0, 0.5, 0.1, 5.0); };
  const std::vector<double> roots = oracle::scan_roots(gap, 0.2, 5.0);
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0], kMinimalRoot, 1e-12);
  EXPECT_NEAR(roots[1], kSecondRoot, 1e-12);
}

TEST(UpperHat, Benchmark) {
  const MeshPtr m = build_uniform_mesh(0.0, 1.0, 50);
  const GridFunction ubar = GridFunction::constant(m, 1.0);
  const SolveReport rep = solve_upper_hat(kBench, ubar);
  ASSERT_TRUE(rep.converged());
  EXPECT_LT(max_dev(rep.u, std::sqrt(2.0)), 1e-10);
  EXPECT_GT(rep.u.min(), 0.0);
}

TEST(UpperHat, AboveSingularSolution) {
  const MeshPtr m = build_uniform_mesh(0.0, 1.0, 60);
  const ExponentField ef = variable_field();
  const SingularSolution sing = solve_pure_singular(ef, m, RegularizationSchedule::geometric());
  ASSERT_TRUE(sing.converged);
  const SolveReport rep = solve_upper_hat(ef, sing.u_bar);
  ASSERT_TRUE(rep.converged());
  EXPECT_GT((rep.u.values() - sing.u_bar.values()).minCoeff(), 0.0);
}

TEST(Lambda0, Values) {
  const MeshPtr m = build_uniform_mesh(0.0, 1.0, 10);
  EXPECT_NEAR(lambda0_estimate(GridFunction::constant(m, std::sqrt(2.0)), kF1), 0.25, 1e-14);
  EXPECT_EQ(lambda0_estimate(GridFunction::constant(m, std::sqrt(2.0)), Reaction::zero()),
            std::numeric_limits<double>::infinity());
  const GridFunction lo = GridFunction::sample(m, [](double z) { return 1.0 + z; });
  const GridFunction hi = GridFunction::sample(m, [](double z) { return 1.1 + z; });
  EXPECT_LT(lambda0_estimate(hi, kF1), lambda0_estimate(lo, kF1));
}

TEST(IterationShift, BenchmarkNeedsOne) {
  // x^{-1/2} + lambda x^4 + xi x^2 is increasing on [1, inf) once 2 xi >= 1/2.
  EXPECT_EQ(bench_problem(0.1, 20).shift_xi_hat, 1.0);
  const MeshPtr m = build_uniform_mesh(0.0, 1.0, 10);
  // from 0.1 the singular term needs xi >= 0.25 * 0.1^{-5/2} ~ 79
  EXPECT_EQ(estimate_iteration_shift(kBench, kF1, 0.0, *m, 0.1, 10.0), 128.0);
}

TEST(MinimalSolution, BenchmarkLambdaTenth) {
  const LambdaProblem prob = bench_problem(0.1);
  const IterationReport rep = minimal_solution_iterate(prob);
  ASSERT_TRUE(rep.converged()) << rep.message;
  EXPECT_LT(max_dev(rep.u, kMinimalRoot), 1e-8);
  EXPECT_LE(rep.monotonicity_violation, 1e-12);
  EXPECT_TRUE(verify_solution(prob, rep.u).passes(prob.tol));
}

TEST(MinimalSolution, LambdaZeroIsSingularSolution) {
  const LambdaProblem prob = bench_problem(0.0, 40);
  const IterationReport rep = minimal_solution_iterate(prob);
  ASSERT_TRUE(rep.converged());
  EXPECT_LT(max_dev(rep.u, 1.0), 1e-12);
  EXPECT_EQ(rep.iterations, 1);
}

TEST(MinimalSolution, DivergesAboveCriticalLambda) {
  const IterationReport rep = minimal_solution_iterate(bench_problem(1.0, 40));
  EXPECT_EQ(rep.outcome, IterationOutcome::diverged);
}

TEST(MinimalSolution, StallsWithTinyIterationBudget) {
  LambdaProblem prob = bench_problem(0.25, 40);
  prob.max_iter = 3;
  EXPECT_EQ(minimal_solution_iterate(prob).outcome, IterationOutcome::stalled);
}

TEST(MinimalSolution, WarmStartReachesSameSolution) {
  LambdaProblem prob = bench_problem(0.2, 50);
  const IterationReport cold = minimal_solution_iterate(prob);
  LambdaProblem prev = bench_problem(0.15, 50);
  prob.start = minimal_solution_iterate(prev).u;
  const IterationReport warm = minimal_solution_iterate(prob);
  ASSERT_TRUE(cold.converged() && warm.converged());
  EXPECT_LT(sup_distance(cold.u, warm.u), 1e-8);
  EXPECT_LT(warm.iterations, cold.iterations);
}

TEST(MinimalSolution, VariableDataOrderedAndVerified) {
  const MeshPtr m = build_uniform_mesh(0.0, 1.0, 80);
  const ExponentField ef = variable_field();
  const SingularSolution sing = solve_pure_singular(ef, m, RegularizationSchedule::geometric());
  ASSERT_TRUE(sing.converged);
  const LambdaProblem prob = make_lambda_problem(ef, Reaction::power(ef.r), 0.05, sing.u_bar);
  const IterationReport rep = minimal_solution_iterate(prob);
  ASSERT_TRUE(rep.converged()) << rep.message;
  const SolutionCheck chk = verify_solution(prob, rep.u);
  EXPECT_TRUE(chk.passes(prob.tol));
  EXPECT_GT((rep.u.values() - sing.u_bar.values()).minCoeff(), 0.0);
  EXPECT_LE(rep.monotonicity_violation, 10.0 * prob.tol);

  // The truncated-at-u_bar energy decreases from u_bar to the minimal solution.
  EnergySpec trunc;
  trunc.ef = ef;
  trunc.truncation = truncate_reaction(sing.u_bar, std::nullopt, RhsBase{ef.eta, Reaction::power(ef.r), 0.05});
  EXPECT_LT(energy_eval(trunc, rep.u), energy_eval(trunc, sing.u_bar));
}

TEST(Verify, Flags) {
  const LambdaProblem prob = bench_problem(0.1, 20);
  const SolutionCheck at_ubar = verify_solution(prob, prob.u_bar);
  EXPECT_GT(at_ubar.residual_inf, 0.0);
  EXPECT_TRUE(at_ubar.lower_bound_ok);
  const SolutionCheck half = verify_solution(prob, GridFunction(prob.u_bar.mesh_ptr(), 0.5 * prob.u_bar.values()));
  EXPECT_FALSE(half.lower_bound_ok);
  EXPECT_TRUE(half.positive_ok);
}

TEST(MountainPass, BenchmarkSecondRoot) {
  const LambdaProblem prob = bench_problem(0.1);
  const IterationReport minimal = minimal_solution_iterate(prob);
  ASSERT_TRUE(minimal.converged());
  const MountainPassReport mp = mountain_pass(prob, minimal.u);
  ASSERT_TRUE(mp.converged) << mp.message;
  EXPECT_LT(max_dev(mp.u_hat, kSecondRoot), 1e-8);
  EXPECT_GT(mp.m_level, mp.base_level);
  EXPECT_GT(sup_distance(mp.u_hat, minimal.u), 10.0 * prob.tol);
  EXPECT_GE((mp.u_hat.values() - minimal.u.values()).minCoeff(), -prob.tol);
  EXPECT_TRUE(verify_solution(prob, mp.u_hat).passes(prob.tol));
  EXPECT_EQ(mp.path_energy_profile.size(), 21u);
}

TEST(MountainPass, VariableData) {
  const MeshPtr m = build_uniform_mesh(0.0, 1.0, 60);
  const ExponentField ef = variable_field();
  const SingularSolution sing = solve_pure_singular(ef, m, RegularizationSchedule::geometric());
  ASSERT_TRUE(sing.converged);
  const LambdaProblem prob = make_lambda_problem(ef, Reaction::power(ef.r), 0.05, sing.u_bar);
  const IterationReport minimal = minimal_solution_iterate(prob);
  ASSERT_TRUE(minimal.converged());
  const MountainPassReport mp = mountain_pass(prob, minimal.u);
  ASSERT_TRUE(mp.converged) << mp.message << " sweeps=" << mp.sweeps << " m=" << mp.m_level;
  EXPECT_GT(mp.m_level, mp.base_level);
  EXPECT_GE((mp.u_hat.values() - minimal.u.values()).minCoeff(), -prob.tol);
  EXPECT_GT(sup_distance(mp.u_hat, minimal.u), 0.1);
  EXPECT_TRUE(verify_solution(prob, mp.u_hat).passes(prob.tol));
}
