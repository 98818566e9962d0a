#include "pqlap/continuation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace pqlap {

namespace {

struct Evaluation {
  bool ok = false;
  IterationReport report;
};

Evaluation evaluate(const LambdaProblem& prob) {
  Evaluation ev{false, IterationReport{IterationOutcome::stalled, prob.u_bar, 0, 0.0, 0.0, 0.0, 0.0, {}}};
  try {
    ev.report = minimal_solution_iterate(prob);
    ev.ok = admissible(prob, ev.report);
  } catch (const std::exception& ex) {
    ev.report.message = ex.what();
  }
  return ev;
}

BranchPoint solve_point(const LambdaProblem& prob) {
  BranchPoint pt;
  pt.lambda = prob.lambda;
  const Evaluation ev = evaluate(prob);
  pt.admissible = ev.ok;
  pt.outcome = ev.report.outcome;
  pt.iterations = ev.report.iterations;
  pt.message = ev.report.message;
  pt.residual = ev.report.residual_inf;
  if (ev.ok) {
    pt.u_star = ev.report.u;
    pt.energy = ev.report.energy;
    pt.min_value = ev.report.u.min();
    pt.sup_value = ev.report.u.sup_norm();
  } else {
    pt.energy = std::numeric_limits<double>::quiet_NaN();
    pt.min_value = std::numeric_limits<double>::quiet_NaN();
    pt.sup_value = std::numeric_limits<double>::quiet_NaN();
  }
  return pt;
}

LeftContinuity left_continuity_probe(const LambdaProblem& tmpl, const BranchPoint& hat, const BranchOptions& opts) {
  LeftContinuity lc;
  lc.lambda_hat = hat.lambda;
  std::optional<GridFunction> warm;
  for (int k = opts.left_k_min; k <= opts.left_k_max; ++k) {
    LambdaProblem prob = problem_at(tmpl, hat.lambda * (1.0 - std::ldexp(1.0, -k)));
    prob.start = warm;
    const Evaluation ev = evaluate(prob);
    if (!ev.ok) break;
    warm = ev.report.u;
    lc.k_values.push_back(k);
    lc.lambdas.push_back(prob.lambda);
    lc.distances.push_back(sup_distance(ev.report.u, *hat.u_star));
    if (k >= opts.left_k_min + 5 && lc.distances.back() <= opts.left_target) break;
  }
  lc.computed = !lc.distances.empty();
  if (lc.computed) {
    lc.gap = lc.distances.back();
    lc.decreasing = std::adjacent_find(lc.distances.begin(), lc.distances.end(), std::less_equal<double>()) ==
                    lc.distances.end();
  }
  return lc;
}

}  // namespace

LambdaProblem problem_at(const LambdaProblem& tmpl, double lambda) {
  LambdaProblem prob = tmpl;
  prob.lambda = lambda;
  prob.start.reset();
  prob.shift_xi_hat = estimate_iteration_shift(prob.ef, prob.reaction, lambda, prob.u_bar.mesh(), prob.u_bar.min(),
                                               prob.cap);
  return prob;
}

bool admissible(const LambdaProblem& prob, const IterationReport& rep) {
  return rep.converged() && verify_solution(prob, rep.u).passes(prob.tol);
}

LambdaBracket find_lambda_bracket(const LambdaProblem& tmpl, double lo, double hi, int max_doublings) {
  if (!(hi > lo)) throw std::invalid_argument("find_lambda_bracket: need hi > lo");
  const Evaluation at_lo = evaluate(problem_at(tmpl, lo));
  if (!at_lo.ok) throw std::runtime_error("find_lambda_bracket: lower end is not admissible");
  GridFunction warm = at_lo.report.u;
  for (int k = 0; k <= max_doublings; ++k, hi *= 2.0) {
    LambdaProblem prob = problem_at(tmpl, hi);
    prob.start = warm;
    const Evaluation ev = evaluate(prob);
    if (!ev.ok) return {lo, hi};
    lo = hi;
    warm = ev.report.u;
  }
  throw std::runtime_error("find_lambda_bracket: no inadmissible lambda found");
}

LambdaStarResult bisect_lambda_star(const LambdaProblem& tmpl, double lo, double hi, double tol_lambda) {
  if (!(hi > lo) || !(tol_lambda > 0.0)) throw std::invalid_argument("bisect_lambda_star: need lo < hi, tol > 0");
  LambdaStarResult res;
  const Evaluation at_lo = evaluate(problem_at(tmpl, lo));
  const Evaluation at_hi = evaluate(problem_at(tmpl, hi));
  res.evaluations = 2;
  if (!at_lo.ok) throw std::invalid_argument("bisect_lambda_star: lo is not admissible");
  if (at_hi.ok) throw std::invalid_argument("bisect_lambda_star: hi is admissible");

  GridFunction u_lo = at_lo.report.u;
  while (hi - lo > tol_lambda) {
    const double mid = 0.5 * (lo + hi);
    LambdaProblem prob = problem_at(tmpl, mid);
    prob.start = u_lo;
    const Evaluation ev = evaluate(prob);
    ++res.evaluations;
    if (ev.ok) {
      // The branch is increasing; a solution below the previous one means the
      // predicate is not tracking the minimal branch.
      if ((ev.report.u.values() - u_lo.values()).minCoeff() < -10.0 * tmpl.tol)
        throw NonMonotonePredicate("bisect_lambda_star: minimal solution decreased inside the bracket", {lo, mid, hi});
      lo = mid;
      u_lo = ev.report.u;
    } else {
      hi = mid;
    }
  }
  res.estimate = lo;
  res.bracket = {lo, hi};
  res.u_at_estimate = u_lo;
  return res;
}

Branch build_branch(const LambdaProblem& tmpl, std::vector<double> lambda_values, const BranchOptions& opts) {
  for (const double l : lambda_values)
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("build_branch: lambda values must be positive");
  std::sort(lambda_values.begin(), lambda_values.end());

  Branch br;
  br.points.resize(lambda_values.size());
  if (opts.chain || opts.jobs <= 1) {
    std::optional<GridFunction> warm;
    for (std::size_t i = 0; i < lambda_values.size(); ++i) {
      LambdaProblem prob = problem_at(tmpl, lambda_values[i]);
      if (opts.chain) prob.start = warm;
      br.points[i] = solve_point(prob);
      if (br.points[i].admissible) warm = br.points[i].u_star;
    }
  } else {
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
      for (std::size_t i = next++; i < lambda_values.size(); i = next++)
        br.points[i] = solve_point(problem_at(tmpl, lambda_values[i]));
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(opts.jobs, static_cast<unsigned>(lambda_values.size()));
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Interval structure and monotonicity.
  BranchDiagnostics& d = br.diagnostics;
  const BranchPoint* prev = nullptr;
  bool failed = false;
  std::optional<std::size_t> last_ok, first_bad;
  for (std::size_t i = 0; i < br.points.size(); ++i) {
    const BranchPoint& pt = br.points[i];
    if (!pt.admissible) {
      failed = true;
      if (!first_bad) first_bad = i;
      continue;
    }
    if (failed) {
      d.prefix_ok = false;
      d.interleaved.push_back(pt.lambda);
    }
    if (prev) {
      const Vector inc = pt.u_star->values() - prev->u_star->values();
      d.monotonicity_violation = std::max(d.monotonicity_violation, -inc.minCoeff());
      d.mean_increments.push_back(inc.mean());
    }
    prev = &pt;
    if (!failed) last_ok = i;
  }

  if (opts.estimate_lambda_star && last_ok) {
    try {
      const double lo = br.points[*last_ok].lambda;
      const LambdaBracket b =
          first_bad ? LambdaBracket{lo, br.points[*first_bad].lambda} : find_lambda_bracket(tmpl, lo, 2.0 * lo);
      const LambdaStarResult ls = bisect_lambda_star(tmpl, b.lo, b.hi, opts.tol_lambda);
      br.lambda_star_estimate = ls.estimate;
      br.lambda_star_bracket = ls.bracket;
    } catch (const std::exception&) {
      // left unset; the caller sees the missing estimate
    }
  }

  if (opts.second_solutions) {
    for (BranchPoint& pt : br.points) {
      if (!pt.admissible) continue;
      if (br.lambda_star_estimate && pt.lambda >= *br.lambda_star_estimate) continue;
      const MountainPassReport mp = mountain_pass(problem_at(tmpl, pt.lambda), *pt.u_star, opts.mountain);
      if (mp.converged) pt.u_second = mp.u_hat;
      else pt.message += (pt.message.empty() ? "" : "; ") + std::string("mountain pass: ") + mp.message;
    }
  }

  if (opts.left_continuity && last_ok) d.left = left_continuity_probe(tmpl, br.points[*last_ok], opts);
  return br;
}

}  // namespace pqlap
