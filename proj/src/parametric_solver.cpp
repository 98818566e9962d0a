#include "pqlap/parametric_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pqlap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inner_tolerance(double tol, const Mesh& mesh, const Vector& source) {
  const double scale = (mesh.qp_weights().array() * source.array().abs()).maxCoeff();
  return std::max(1e-2 * tol, 1e-13 * scale);
}

double residual_or_inf(const DiscreteEnergy& energy, const Vector& u) {
  try {
    return energy.residual(u).cwiseAbs().maxCoeff();
  } catch (const DomainError&) {
    return kInf;
  } catch (const NonFiniteError&) {
    return kInf;
  }
}

// H^1 inner product of two nodal vectors, integrated with the mesh quadrature.
double h1_dot(const Mesh& mesh, const Vector& a, const Vector& b) {
  const QpValues qa = eval_with_gradient(mesh, a);
  const QpValues qb = eval_with_gradient(mesh, b);
  const Vector integrand = qa.derivative.cwiseProduct(qb.derivative) + qa.value.cwiseProduct(qb.value);
  return integrate_qp(mesh, integrand);
}

double sup_dist(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Resamples a polyline at n points equally spaced in sup-norm arc length.
std::vector<Vector> reparametrize(const std::vector<Vector>& path, std::size_t n) {
  std::vector<double> s(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) s[i] = s[i - 1] + sup_dist(path[i], path[i - 1]);
  const double total = s.back();
  std::vector<Vector> out;
  out.reserve(n);
  out.push_back(path.front());
  std::size_t seg = 1;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double target = total * static_cast<double>(j) / static_cast<double>(n - 1);
    while (seg + 1 < path.size() && s[seg] < target) ++seg;
    const double len = s[seg] - s[seg - 1];
    const double t = len > 0.0 ? std::clamp((target - s[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back(path[seg - 1] + t * (path[seg] - path[seg - 1]));
  }
  out.push_back(path.back());
  return out;
}

}  // namespace

void LambdaProblem::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("LambdaProblem: lambda must be >= 0");
  if (!(u_bar.min() > 0.0)) throw std::invalid_argument("LambdaProblem: u_bar must be strictly positive");
  if (!(shift_xi_hat >= 0.0)) throw std::invalid_argument("LambdaProblem: shift must be >= 0");
  if (!(cap > u_bar.max())) throw std::invalid_argument("LambdaProblem: cap must exceed max u_bar");
  if (!(tol > 0.0) || max_iter < 1) throw std::invalid_argument("LambdaProblem: tol and max_iter must be positive");
  if (start && start->size() != u_bar.size()) throw std::invalid_argument("LambdaProblem: warm start on another mesh");
}

double estimate_iteration_shift(const ExponentField& ef, const Reaction& reaction, double lambda, const Mesh& mesh,
                                double lo, double hi) {
  if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("estimate_iteration_shift: need 0 < lo < hi");
  const std::vector<double> grid = geometric_grid(lo, hi, 1.02);
  std::vector<double> z_samples(mesh.nodes().data(), mesh.nodes().data() + mesh.n_nodes());
  std::vector<double> probe_grid{0.0};
  probe_grid.insert(probe_grid.end(), grid.begin(), grid.end());

  const auto monotone = [&](double xi_hat) {
    for (const double z : z_samples) {
      const double p = ef.p(z), eta = ef.eta(z), e = reaction.exponent(z);
      double prev = -kInf;
      for (const double x : grid) {
        const double g = std::pow(x, -eta) + lambda * reaction.f_exp(e, z, x) + xi_hat * std::pow(x, p - 1.0);
        if (g < prev - 1e-12 * std::abs(prev)) return false;
        prev = g;
      }
    }
    return shifted_monotone_probe(reaction, ef, hi, xi_hat, probe_grid, z_samples);
  };
  double xi_hat = 1.0;
  for (int k = 0; k < 200 && !monotone(xi_hat); ++k) xi_hat *= 2.0;
  return xi_hat;
}

LambdaProblem make_lambda_problem(const ExponentField& ef, const Reaction& reaction, double lambda,
                                  const GridFunction& u_bar, double tol, double cap_factor) {
  LambdaProblem prob{ef, reaction, lambda, u_bar, 1.0, 0.0, tol, 100000, std::nullopt};
  prob.cap = cap_factor * u_bar.sup_norm();
  prob.shift_xi_hat = estimate_iteration_shift(ef, reaction, lambda, u_bar.mesh(), u_bar.min(), prob.cap);
  prob.validate();
  return prob;
}

EnergySpec lambda_energy_spec(const LambdaProblem& prob) {
  EnergySpec spec;
  spec.ef = prob.ef;
  spec.reaction = prob.reaction;
  spec.lambda = prob.lambda;
  spec.singular = ExactSingular{};
  return spec;
}

SolveReport solve_upper_hat(const ExponentField& ef, const GridFunction& u_bar, double tol) {
  if (!(u_bar.min() > 0.0)) throw std::invalid_argument("solve_upper_hat: u_bar must be strictly positive");
  const Mesh& m = u_bar.mesh();
  const Vector uq = interpolate_qp(m, u_bar.values());
  Vector h(m.n_qp());
  for (Index q = 0; q < m.n_qp(); ++q) h[q] = std::pow(uq[q], -ef.eta(m.qp_coords()[q])) + 1.0;
  EnergySpec spec;
  spec.ef = ef;
  spec.source_qp = h;
  return minimize_energy(DiscreteEnergy(spec, u_bar.mesh_ptr()), u_bar, NewtonOptions{tol, 200, 1e-8});
}

double lambda0_estimate(const GridFunction& u_hat, const Reaction& reaction) {
  const Mesh& m = u_hat.mesh();
  const Vector uq = interpolate_qp(m, u_hat.values());
  double fmax = 0.0;
  for (Index q = 0; q < m.n_qp(); ++q) fmax = std::max(fmax, reaction.f(m.qp_coords()[q], uq[q]));
  return fmax > 0.0 ? 1.0 / fmax : kInf;
}

const char* to_string(IterationOutcome outcome) {
  switch (outcome) {
    case IterationOutcome::converged: return "converged";
    case IterationOutcome::diverged: return "diverged";
    case IterationOutcome::stalled: return "stalled";
  }
  return "unknown";
}

IterationReport minimal_solution_iterate(const LambdaProblem& prob) {
  prob.validate();
  const MeshPtr& mesh = prob.u_bar.mesh_ptr();
  const Mesh& m = *mesh;
  const Index nq = m.n_qp();

  Vector zq = m.qp_coords(), eta(nq), pm1(nq), rexp(nq);
  for (Index q = 0; q < nq; ++q) {
    eta[q] = prob.ef.eta(zq[q]);
    pm1[q] = prob.ef.p(zq[q]) - 1.0;
    rexp[q] = prob.reaction.exponent(zq[q]);
  }

  const DiscreteEnergy exact(lambda_energy_spec(prob), mesh);
  EnergySpec shifted;
  shifted.ef = prob.ef;
  shifted.shift = prob.shift_xi_hat;

  Vector u = prob.u_bar.values();
  if (prob.start) u = u.cwiseMax(prob.start->values());

  IterationReport rep{IterationOutcome::stalled, GridFunction(mesh, u), 0, 0.0, 0.0, 0.0, 0.0, {}};
  Vector h(nq);
  for (int k = 0; k < prob.max_iter; ++k) {
    const Vector uq = interpolate_qp(m, u);
    for (Index q = 0; q < nq; ++q) {
      h[q] = std::pow(uq[q], -eta[q]) + prob.lambda * prob.reaction.f_exp(rexp[q], zq[q], uq[q]) +
             prob.shift_xi_hat * std::pow(uq[q], pm1[q]);
    }
    shifted.source_qp = h;
    const SolveReport inner = minimize_energy(DiscreteEnergy(shifted, mesh), GridFunction(mesh, u),
                                              NewtonOptions{inner_tolerance(prob.tol, m, h), 200, 1e-8});
    rep.iterations = k + 1;
    if (!inner.converged() || !inner.u.all_finite()) {
      if (!inner.u.all_finite() || inner.u.max() > prob.cap || !h.allFinite()) {
        rep.outcome = IterationOutcome::diverged;
        rep.u = inner.u;
        rep.energy = std::numeric_limits<double>::quiet_NaN();
        rep.residual_inf = kInf;
        rep.message = "exceeded cap at iteration " + std::to_string(k);
        return rep;
      }
      throw std::runtime_error("minimal_solution_iterate: inner solve failed at iteration " + std::to_string(k) +
                               ": " + inner.message);
    }
    const Vector& next = inner.u.values();
    rep.last_step = sup_dist(next, u);
    rep.monotonicity_violation = std::max(rep.monotonicity_violation, (u - next).maxCoeff());
    u = next;

    if (u.maxCoeff() > prob.cap) {
      rep.outcome = IterationOutcome::diverged;
      rep.u = GridFunction(mesh, u);
      rep.energy = std::numeric_limits<double>::quiet_NaN();
      rep.residual_inf = kInf;
      rep.message = "exceeded cap at iteration " + std::to_string(k);
      return rep;
    }
    if (rep.last_step <= prob.tol) {
      rep.residual_inf = residual_or_inf(exact, u);
      if (rep.residual_inf <= prob.tol) {
        rep.outcome = IterationOutcome::converged;
        rep.u = GridFunction(mesh, u);
        rep.energy = exact.energy(u);
        return rep;
      }
    }
  }
  rep.u = GridFunction(mesh, u);
  rep.residual_inf = residual_or_inf(exact, u);
  rep.energy = exact.energy(u);
  rep.message = "iteration limit reached with step " + std::to_string(rep.last_step);
  return rep;
}

SolutionCheck verify_solution(const LambdaProblem& prob, const GridFunction& u, double slack) {
  SolutionCheck c;
  c.positive_ok = u.min() > 0.0;
  c.lower_bound_ok = (u.values() - prob.u_bar.values()).minCoeff() >= -slack;
  c.residual_inf = residual_or_inf(DiscreteEnergy(lambda_energy_spec(prob), u.mesh_ptr()), u.values());
  return c;
}

MountainPassReport mountain_pass(const LambdaProblem& prob, const GridFunction& u0, const MountainPassOptions& opts) {
  prob.validate();
  if (opts.n_path < 3) throw std::invalid_argument("mountain_pass: n_path must be at least 3");
  if (!(u0.min() > 0.0)) throw std::invalid_argument("mountain_pass: u0 must be strictly positive");

  const MeshPtr& mesh = u0.mesh_ptr();
  const Mesh& m = *mesh;
  EnergySpec spec;
  spec.ef = prob.ef;
  spec.truncation = truncate_reaction(u0, std::nullopt, RhsBase{prob.ef.eta, prob.reaction, prob.lambda});
  const DiscreteEnergy v(spec, mesh);

  MountainPassReport rep{u0, 0.0, 0.0, {}, 0.0, 0, false, {}};
  rep.base_level = v.energy(u0.values());

  // Endpoint below the base level along the constant direction.
  double t = 2.0 * u0.max();
  const Vector ones = Vector::Ones(m.n_nodes());
  for (int k = 0; k < 60 && v.energy(t * ones) >= rep.base_level; ++k) t *= 2.0;
  rep.endpoint_scale = t;
  if (v.energy(t * ones) >= rep.base_level) {
    rep.message = "no endpoint below the base level";
    return rep;
  }

  const std::size_t n = static_cast<std::size_t>(opts.n_path);
  std::vector<Vector> path(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n - 1);
    path[i] = (1.0 - s) * u0.values() + s * t * ones;
  }

  const auto accept = [&](const SolveReport& r) {
    return r.converged() && sup_distance(r.u, u0) > 10.0 * prob.tol && r.energy > rep.base_level &&
           (r.u.values() - u0.values()).minCoeff() >= -prob.tol;
  };

  std::vector<double> e(n);
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    rep.sweeps = sweep + 1;
    for (std::size_t i = 0; i < n; ++i) e[i] = v.energy(path[i]);
    const std::size_t imax =
        static_cast<std::size_t>(std::max_element(e.begin() + 1, e.end() - 1) - e.begin());
    if (e[imax] <= rep.base_level) {
      rep.path_energy_profile = e;
      rep.message = "path collapsed onto the base level";
      return rep;
    }

    // Sharpen the max along the polyline through the neighbours of imax.
    const Vector& left = path[imax - 1];
    const Vector& mid = path[imax];
    const Vector& right = path[imax + 1];
    const auto on_path = [&](double s) -> Vector { return s < 0.0 ? Vector(mid + (-s) * (left - mid)) : Vector(mid + s * (right - mid)); };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = -1.0, b = 1.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = v.energy(on_path(c)), fd = v.energy(on_path(d));
    for (int it = 0; it < 80; ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = v.energy(on_path(c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = v.energy(on_path(d));
      }
    }
    Vector w = on_path(0.5 * (a + b));

    const double rinf = v.residual(w).cwiseAbs().maxCoeff();
    if (rinf <= opts.polish_threshold || sweep % 20 == 19) {
      SolveReport polished = newton_solve(v, GridFunction(mesh, w), NewtonOptions{prob.tol, 100, 1e-8});
      if (accept(polished)) {
        for (std::size_t i = 0; i < n; ++i) e[i] = v.energy(path[i]);
        rep.path_energy_profile = e;
        rep.u_hat = polished.u;
        rep.m_level = polished.energy;
        rep.converged = true;
        return rep;
      }
    }
    path[imax] = w;

    // String update: every interior point descends in H^1 with the path
    // tangent projected out, then the path is resampled.
    // Steps are capped at half the sample spacing so the ridge stays resolved.
    double spacing = 0.0;
    for (std::size_t i = 1; i < n; ++i) spacing += sup_dist(path[i], path[i - 1]);
    const double max_move = 0.5 * spacing / static_cast<double>(n - 1);
    bool moved = false;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const Vector res = v.residual(path[i]);
      const Vector grad = sobolev_gradient(m, res);
      const Vector tangent = path[i + 1] - path[i - 1];
      const double tt = h1_dot(m, tangent, tangent);
      const Vector perp = tt > 0.0 ? Vector(grad - (res.dot(tangent) / tt) * tangent) : grad;
      const double slope = res.dot(perp);
      if (!(slope > 1e-300)) continue;
      const double ei = v.energy(path[i]);
      double alpha = std::min(1.0, max_move / perp.cwiseAbs().maxCoeff());
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        const Vector trial = path[i] - alpha * perp;
        if (v.energy(trial) <= ei - 1e-4 * alpha * slope) {
          path[i] = trial;
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      rep.path_energy_profile = e;
      rep.message = "path is stationary but Newton polishing failed";
      return rep;
    }
    path = reparametrize(path, n);
  }
  for (std::size_t i = 0; i < n; ++i) e[i] = v.energy(path[i]);
  rep.path_energy_profile = e;
  rep.message = "sweep limit reached";
  return rep;
}

}  // namespace pqlap
