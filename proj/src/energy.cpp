#include "pqlap/energy.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pqlap {

namespace {

double signed_pow(double x, double e) { return x == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(x), e), x); }

std::optional<Vector> solve_sparse(const SparseMatrix& a, const Vector& b) {
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) return std::nullopt;
  Vector x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Right-hand side before truncation

double RhsBase::value(double z, double x) const {
  double v = std::pow(x, -eta(z));
  if (reaction) v += lambda * reaction->f(z, x);
  return v;
}

double RhsBase::slope(double z, double x) const {
  const double e = eta(z);
  double s = -e * std::pow(x, -e - 1.0);
  if (reaction) s += lambda * reaction->df(z, x);
  return s;
}

double RhsBase::primitive(double z, double x) const {
  if (x <= 0.0) return 0.0;
  const double e = eta(z);
  double v = std::pow(x, 1.0 - e) / (1.0 - e);
  if (reaction) v += lambda * reaction->F(z, x);
  return v;
}

double TruncatedReaction::value(double z, double x) const {
  double y = x;
  if (lower) y = std::max(y, (*lower)(z));
  if (upper) y = std::min(y, (*upper)(z));
  return base.value(z, y);
}

TruncatedReaction truncate_reaction(std::optional<GridFunction> lower, std::optional<GridFunction> upper,
                                    RhsBase base) {
  if (lower && upper) {
    if (lower->size() != upper->size()) throw std::invalid_argument("truncate_reaction: bound size mismatch");
    if (((lower->values() - upper->values()).array() > 0.0).any())
      throw std::invalid_argument("truncate_reaction: lower bound exceeds upper bound");
  }
  if (!base.eta) throw std::invalid_argument("truncate_reaction: base needs eta");
  return {std::move(lower), std::move(upper), std::move(base)};
}

// ---------------------------------------------------------------------------
// DiscreteEnergy

DiscreteEnergy::DiscreteEnergy(const EnergySpec& spec, MeshPtr mesh) : mesh_(std::move(mesh)) {
  const Mesh& m = *mesh_;
  const FieldSamples fs = sample_qp(spec.ef, m);
  z_ = m.qp_coords();
  w_ = m.qp_weights();
  p_ = fs.p;
  q_ = fs.q;
  eta_ = fs.eta;
  xi_ = fs.xi.array() + spec.shift;
  lambda_ = spec.lambda;
  if (spec.lambda < 0.0) throw std::invalid_argument("EnergySpec: lambda must be nonnegative");
  if (spec.shift < 0.0) throw std::invalid_argument("EnergySpec: shift must be nonnegative");

  if (spec.truncation) {
    if (!std::holds_alternative<NoSingular>(spec.singular))
      throw std::invalid_argument("EnergySpec: truncation replaces the singular term; use NoSingular");
    const TruncatedReaction& tr = *spec.truncation;
    mode_ = Mode::truncated;
    reaction_ = tr.base.reaction;
    lambda_ = tr.base.lambda;
    eta_ = z_.unaryExpr(tr.base.eta);
    has_lower_ = tr.lower.has_value();
    has_upper_ = tr.upper.has_value();
    if (has_lower_) lower_ = interpolate_qp(m, tr.lower->values());
    if (has_upper_) upper_ = interpolate_qp(m, tr.upper->values());
    if (has_lower_ && (lower_.array() <= 0.0).any())
      throw std::invalid_argument("TruncatedReaction: lower bound must be positive");
    if (!has_lower_ && has_upper_ && (upper_.array() <= 0.0).any())
      throw std::invalid_argument("TruncatedReaction: upper bound must be positive");
  } else {
    reaction_ = spec.reaction;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, NoSingular>) {
            mode_ = Mode::none;
          } else if constexpr (std::is_same_v<T, ExactSingular>) {
            mode_ = Mode::exact;
          } else if constexpr (std::is_same_v<T, RegularizedSingular>) {
            if (!(s.eps > 0.0 && s.eps <= 1.0)) throw std::invalid_argument("EnergySpec: eps must lie in (0, 1]");
            mode_ = Mode::regularized;
            eps_ = s.eps;
          } else {
            if (!(s.eps > 0.0 && s.eps <= 1.0)) throw std::invalid_argument("EnergySpec: eps must lie in (0, 1]");
            if (s.g.min() < 0.0) throw std::invalid_argument("EnergySpec: frozen g must be nonnegative");
            if (s.g.size() != m.n_nodes()) throw std::invalid_argument("EnergySpec: frozen g on a different mesh");
            mode_ = Mode::frozen;
            eps_ = s.eps;
            const Vector gq = interpolate_qp(m, s.g.values());
            frozen_rhs_.resize(m.n_qp());
            for (Index i = 0; i < m.n_qp(); ++i) frozen_rhs_[i] = std::pow(gq[i] + eps_, -eta_[i]);
          }
        },
        spec.singular);
  }

  rexp_ = Vector::Zero(m.n_qp());
  if (reaction_) {
    for (Index i = 0; i < m.n_qp(); ++i) rexp_[i] = reaction_->exponent(z_[i]);
  }

  if (spec.source_qp) {
    if (spec.source_qp->size() != m.n_qp()) throw std::invalid_argument("EnergySpec: source size mismatch");
    source_ = *spec.source_qp;
  }

  if (mode_ == Mode::truncated) {
    const auto cache = [&](const Vector& bound, Vector& value, Vector& prim) {
      value.resize(m.n_qp());
      prim.resize(m.n_qp());
      for (Index i = 0; i < m.n_qp(); ++i) {
        value[i] = base_value(i, bound[i]);
        prim[i] = base_primitive(i, bound[i]);
      }
    };
    if (has_lower_) cache(lower_, lower_value_, lower_primitive_);
    if (has_upper_) cache(upper_, upper_value_, upper_primitive_);
  }
}

double DiscreteEnergy::base_value(Index i, double x) const {
  double v = std::pow(x, -eta_[i]);
  if (reaction_ && lambda_ != 0.0) v += lambda_ * reaction_->f_exp(rexp_[i], z_[i], x);
  return v;
}

double DiscreteEnergy::base_slope(Index i, double x) const {
  double s = -eta_[i] * std::pow(x, -eta_[i] - 1.0);
  if (reaction_ && lambda_ != 0.0) s += lambda_ * reaction_->df_exp(rexp_[i], z_[i], x);
  return s;
}

double DiscreteEnergy::base_primitive(Index i, double x) const {
  if (x <= 0.0) return 0.0;
  double v = std::pow(x, 1.0 - eta_[i]) / (1.0 - eta_[i]);
  if (reaction_ && lambda_ != 0.0) v += lambda_ * reaction_->F_exp(rexp_[i], z_[i], x);
  return v;
}

DiscreteEnergy::PointRhs DiscreteEnergy::rhs(Index i, double x, bool strict) const {
  PointRhs out;
  const auto add_reaction = [&] {
    if (!reaction_ || lambda_ == 0.0) return;
    const double e = rexp_[i];
    out.primitive += lambda_ * reaction_->F_exp(e, z_[i], std::max(x, 0.0));
    out.value += lambda_ * reaction_->f_exp(e, z_[i], x);
    out.slope += lambda_ * reaction_->df_exp(e, z_[i], x);
  };
  const double eta = eta_[i];

  switch (mode_) {
    case Mode::none:
      add_reaction();
      break;
    case Mode::exact:
      if (x > 0.0) {
        out.primitive = std::pow(x, 1.0 - eta) / (1.0 - eta);
        out.value = std::pow(x, -eta);
        out.slope = -eta * std::pow(x, -eta - 1.0);
      } else if (strict) {
        throw DomainError("singular term evaluated at a non-positive value");
      }
      add_reaction();
      break;
    case Mode::regularized:
      if (x > 0.0) {
        out.primitive = (std::pow(x + eps_, 1.0 - eta) - std::pow(eps_, 1.0 - eta)) / (1.0 - eta);
        out.value = std::pow(x + eps_, -eta);
        out.slope = -eta * std::pow(x + eps_, -eta - 1.0);
      } else {
        out.value = std::pow(eps_, -eta);
        out.primitive = x * out.value;
      }
      add_reaction();
      break;
    case Mode::frozen:
      out.value = frozen_rhs_[i];
      out.primitive = frozen_rhs_[i] * x;
      add_reaction();
      break;
    case Mode::truncated:
      if (has_lower_ && x <= lower_[i]) {
        out.value = lower_value_[i];
        out.primitive = x * out.value;
      } else if (has_upper_ && x >= upper_[i]) {
        out.value = upper_value_[i];
        out.primitive = (has_lower_ ? lower_[i] * lower_value_[i] - lower_primitive_[i] : 0.0) +
                        upper_primitive_[i] + (x - upper_[i]) * out.value;
      } else {
        if (x <= 0.0) {
          if (strict) throw DomainError("truncated right-hand side evaluated at a non-positive value");
          break;
        }
        out.value = base_value(i, x);
        out.slope = base_slope(i, x);
        out.primitive = (has_lower_ ? lower_[i] * lower_value_[i] - lower_primitive_[i] : 0.0) + base_primitive(i, x);
      }
      break;
  }

  if (source_.size() > 0) {
    out.value += source_[i];
    out.primitive += source_[i] * x;
  }
  return out;
}

bool DiscreteEnergy::in_domain(const Vector& u) const {
  if (!u.allFinite()) return false;
  const bool needs_positive = mode_ == Mode::exact || (mode_ == Mode::truncated && !has_lower_);
  if (!needs_positive) return true;
  if (mode_ == Mode::exact) return u.minCoeff() > 0.0;
  const Vector uq = interpolate_qp(*mesh_, u);
  for (Index i = 0; i < uq.size(); ++i) {
    if (uq[i] > 0.0) continue;
    if (mode_ == Mode::truncated && has_upper_ && uq[i] >= upper_[i]) continue;
    return false;
  }
  return true;
}

double DiscreteEnergy::energy(const Vector& u) const {
  const QpValues qv = eval_with_gradient(*mesh_, u);
  double total = 0.0;
  for (Index i = 0; i < qv.value.size(); ++i) {
    const double d = std::abs(qv.derivative[i]);
    const double v = std::abs(qv.value[i]);
    const double density = std::pow(d, p_[i]) / p_[i] + std::pow(d, q_[i]) / q_[i] + xi_[i] * std::pow(v, p_[i]) / p_[i] -
                           rhs(i, qv.value[i], false).primitive;
    total += w_[i] * density;
  }
  if (!std::isfinite(total)) throw NonFiniteError("energy is not finite");
  return total;
}

Vector DiscreteEnergy::residual(const Vector& u) const {
  const Mesh& m = *mesh_;
  if (mode_ == Mode::exact && !(u.minCoeff() > 0.0)) throw DomainError("singular term needs u > 0 at every node");
  const QpValues qv = eval_with_gradient(m, u);
  Vector res = Vector::Zero(m.n_nodes());
  for (Index i = 0; i < qv.value.size(); ++i) {
    const Index k = i / 2;
    const double h = m.cell_length(k);
    const double d = qv.derivative[i];
    const double v = qv.value[i];
    const double flux = signed_pow(d, p_[i] - 1.0) + signed_pow(d, q_[i] - 1.0);
    const double zero = xi_[i] * signed_pow(v, p_[i] - 1.0) - rhs(i, v, true).value;
    res[k] += w_[i] * (-flux / h + zero * Mesh::left_shape(i));
    res[k + 1] += w_[i] * (flux / h + zero * Mesh::right_shape(i));
  }
  if (!res.allFinite()) throw NonFiniteError("residual is not finite");
  return res;
}

SparseMatrix DiscreteEnergy::jacobian(const Vector& u, double delta) const {
  const Mesh& m = *mesh_;
  const QpValues qv = eval_with_gradient(m, u);
  const Index n = m.n_nodes();
  Vector diag = Vector::Zero(n);
  Vector off = Vector::Zero(n - 1);
  const double d2 = delta * delta;
  for (Index i = 0; i < qv.value.size(); ++i) {
    const Index k = i / 2;
    const double h = m.cell_length(k);
    const double d = qv.derivative[i];
    const double v = qv.value[i];
    const double g2 = d * d + d2;
    const double a = (p_[i] - 1.0) * std::pow(g2, 0.5 * (p_[i] - 2.0)) + (q_[i] - 1.0) * std::pow(g2, 0.5 * (q_[i] - 2.0));
    const double b = xi_[i] * (p_[i] - 1.0) * std::pow(v * v + d2, 0.5 * (p_[i] - 2.0)) - rhs(i, v, true).slope;
    const double l = Mesh::left_shape(i);
    const double r = Mesh::right_shape(i);
    diag[k] += w_[i] * (a / (h * h) + b * l * l);
    diag[k + 1] += w_[i] * (a / (h * h) + b * r * r);
    off[k] += w_[i] * (-a / (h * h) + b * l * r);
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(3 * n));
  for (Index k = 0; k < n; ++k) trip.emplace_back(k, k, diag[k]);
  for (Index k = 0; k + 1 < n; ++k) {
    trip.emplace_back(k, k + 1, off[k]);
    trip.emplace_back(k + 1, k, off[k]);
  }
  SparseMatrix jac(n, n);
  jac.setFromTriplets(trip.begin(), trip.end());
  return jac;
}

double energy_eval(const EnergySpec& spec, const GridFunction& u) {
  return DiscreteEnergy(spec, u.mesh_ptr()).energy(u.values());
}

Vector assemble_residual(const EnergySpec& spec, const GridFunction& u) {
  return DiscreteEnergy(spec, u.mesh_ptr()).residual(u.values());
}

SparseMatrix assemble_jacobian(const EnergySpec& spec, const GridFunction& u, double regularization_delta) {
  return DiscreteEnergy(spec, u.mesh_ptr()).jacobian(u.values(), regularization_delta);
}

// ---------------------------------------------------------------------------
// Solvers

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::line_search_failed:
      return "line_search_failed";
    case SolveStatus::domain_error:
      return "domain_error";
    case SolveStatus::non_finite:
      return "non_finite";
  }
  return "unknown";
}

Vector sobolev_gradient(const Mesh& mesh, const Vector& residual) {
  const Index n = mesh.n_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(4 * mesh.n_cells()));
  for (Index k = 0; k < mesh.n_cells(); ++k) {
    const double h = mesh.cell_length(k);
    const double dd = 1.0 / h + h / 3.0;
    const double od = -1.0 / h + h / 6.0;
    trip.emplace_back(k, k, dd);
    trip.emplace_back(k + 1, k + 1, dd);
    trip.emplace_back(k, k + 1, od);
    trip.emplace_back(k + 1, k, od);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  auto g = solve_sparse(a, residual);
  if (!g) throw std::runtime_error("sobolev_gradient: H1 Gram matrix solve failed");
  return *g;
}

namespace {

struct Trial {
  bool ok = false;
  Vector u;
  double energy = 0.0;
};

Trial try_point(const DiscreteEnergy& energy, const Vector& u) {
  Trial t;
  if (!energy.in_domain(u)) return t;
  try {
    t.energy = energy.energy(u);
  } catch (const NonFiniteError&) {
    return t;
  }
  t.ok = true;
  t.u = u;
  return t;
}

SolveReport finish(const DiscreteEnergy& energy, const Vector& u, SolveStatus status, int it, int grad_steps,
                   double res_inf, std::string msg) {
  SolveReport rep{GridFunction(energy.mesh_ptr(), u), status, res_inf, 0.0, it, grad_steps, std::move(msg)};
  try {
    rep.energy = energy.energy(u);
  } catch (const NonFiniteError&) {
    rep.energy = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace

SolveReport minimize_energy(const DiscreteEnergy& energy, const GridFunction& u0, const NewtonOptions& opts) {
  Vector u = u0.values();
  if (!energy.in_domain(u)) {
    return finish(energy, u, SolveStatus::domain_error, 0, 0, std::numeric_limits<double>::infinity(),
                  "initial guess outside the singular term's domain");
  }
  double e = 0.0;
  Vector res;
  try {
    e = energy.energy(u);
    res = energy.residual(u);
  } catch (const NonFiniteError& ex) {
    return finish(energy, u, SolveStatus::non_finite, 0, 0, std::numeric_limits<double>::infinity(), ex.what());
  }

  int grad_steps = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    const double rinf = res.cwiseAbs().maxCoeff();
    if (rinf <= opts.tol) return finish(energy, u, SolveStatus::converged, it, grad_steps, rinf, "");

    std::optional<Vector> dir = solve_sparse(energy.jacobian(u, opts.delta), -res);
    bool gradient = !dir || res.dot(*dir) >= 0.0;
    if (gradient) dir = -sobolev_gradient(energy.mesh(), res);

    Trial accepted;
    for (int attempt = 0; attempt < 2 && !accepted.ok; ++attempt) {
      const double slope = res.dot(*dir);
      const double slack = 1e-13 * (1.0 + std::abs(e));
      double alpha = 1.0;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        Trial t = try_point(energy, u + alpha * *dir);
        if (t.ok && t.energy <= e + 1e-4 * alpha * slope + slack) {
          accepted = std::move(t);
          break;
        }
      }
      if (!accepted.ok && !gradient) {
        gradient = true;
        dir = -sobolev_gradient(energy.mesh(), res);
      } else {
        break;
      }
    }
    if (!accepted.ok) return finish(energy, u, SolveStatus::line_search_failed, it, grad_steps, rinf, "no descent step");
    if (gradient) ++grad_steps;

    u = std::move(accepted.u);
    e = accepted.energy;
    try {
      res = energy.residual(u);
    } catch (const NonFiniteError& ex) {
      return finish(energy, u, SolveStatus::non_finite, it, grad_steps, std::numeric_limits<double>::infinity(),
                    ex.what());
    }
  }
  const double rinf = res.cwiseAbs().maxCoeff();
  if (rinf <= opts.tol) return finish(energy, u, SolveStatus::converged, opts.max_iter, grad_steps, rinf, "");
  return finish(energy, u, SolveStatus::max_iterations, opts.max_iter, grad_steps, rinf, "iteration limit");
}

SolveReport minimize_energy(const EnergySpec& spec, const GridFunction& u0, double tol, int max_iter) {
  return minimize_energy(DiscreteEnergy(spec, u0.mesh_ptr()), u0, NewtonOptions{tol, max_iter, 1e-8});
}

SolveReport newton_solve(const DiscreteEnergy& energy, const GridFunction& u0, const NewtonOptions& opts) {
  Vector u = u0.values();
  const auto residual_of = [&](const Vector& x) -> std::optional<Vector> {
    if (!energy.in_domain(x)) return std::nullopt;
    try {
      return energy.residual(x);
    } catch (const NonFiniteError&) {
      return std::nullopt;
    }
  };
  std::optional<Vector> res = residual_of(u);
  if (!res) {
    return finish(energy, u, SolveStatus::domain_error, 0, 0, std::numeric_limits<double>::infinity(),
                  "initial guess outside the residual's domain");
  }
  for (int it = 0; it < opts.max_iter; ++it) {
    const double rnorm = res->norm();
    const double rinf = res->cwiseAbs().maxCoeff();
    if (rinf <= opts.tol) return finish(energy, u, SolveStatus::converged, it, 0, rinf, "");

    const std::optional<Vector> dir = solve_sparse(energy.jacobian(u, opts.delta), -*res);
    if (!dir) return finish(energy, u, SolveStatus::line_search_failed, it, 0, rinf, "singular Jacobian");

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < 50; ++ls, alpha *= 0.5) {
      Vector trial = u + alpha * *dir;
      std::optional<Vector> tr = residual_of(trial);
      if (tr && tr->norm() <= (1.0 - 1e-4 * alpha) * rnorm + 1e-15) {
        u = std::move(trial);
        res = std::move(tr);
        accepted = true;
        break;
      }
    }
    if (!accepted) return finish(energy, u, SolveStatus::line_search_failed, it, 0, rinf, "no merit decrease");
  }
  const double rinf = res->cwiseAbs().maxCoeff();
  if (rinf <= opts.tol) return finish(energy, u, SolveStatus::converged, opts.max_iter, 0, rinf, "");
  return finish(energy, u, SolveStatus::max_iterations, opts.max_iter, 0, rinf, "iteration limit");
}

double gradient_check(const EnergySpec& spec, const GridFunction& u, double h) {
  const DiscreteEnergy energy(spec, u.mesh_ptr());
  const Vector res = energy.residual(u.values());
  Vector fd(res.size());
  Vector work = u.values();
  for (Index i = 0; i < work.size(); ++i) {
    const double saved = work[i];
    work[i] = saved + h;
    const double ep = energy.energy(work);
    work[i] = saved - h;
    const double em = energy.energy(work);
    work[i] = saved;
    fd[i] = (ep - em) / (2.0 * h);
  }
  const double scale = std::max(res.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return (res - fd).cwiseAbs().maxCoeff() / scale;
}

}  // namespace pqlap
