#include "pqlap/modular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pqlap {

namespace {

Vector weights_at_qp(const Mesh& mesh, const ModularConfig& cfg) {
  if (!cfg.weight) return Vector::Ones(mesh.n_qp());
  return mesh.qp_coords().unaryExpr(*cfg.weight);
}

void check_config(const Vector& exponent, const Vector& weight) {
  if ((exponent.array() <= 1.0).any()) throw std::invalid_argument("ModularConfig: exponent must exceed 1");
  if ((weight.array() <= 0.0).any()) throw std::invalid_argument("ModularConfig: weight must be positive");
}

}  // namespace

double modular_qp(const Mesh& mesh, const Vector& values, const Vector& exponent, const Vector& weight) {
  const Vector integrand = weight.array() * values.array().abs().pow(exponent.array());
  return integrate_qp(mesh, integrand);
}

double luxemburg_norm_qp(const Mesh& mesh, const Vector& values, const Vector& exponent, const Vector& weight,
                         double rel_tol, int max_iter) {
  const double scale = values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;

  // rho(u / lambda) is strictly decreasing in lambda: bisect geometrically.
  const auto excess = [&](double lambda) { return modular_qp(mesh, values / lambda, exponent, weight) - 1.0; };
  double lo = std::ldexp(scale, -60);
  double hi = std::ldexp(scale, 60);
  if (excess(lo) < 0.0 || excess(hi) > 0.0) throw std::runtime_error("luxemburg_norm: root not bracketed");

  for (int it = 0; it < max_iter; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double e = excess(mid);
    if (e == 0.0) return mid;
    (e > 0.0 ? lo : hi) = mid;
    if (hi / lo - 1.0 <= rel_tol) return std::sqrt(lo * hi);
  }
  throw std::runtime_error("luxemburg_norm: bisection did not converge");
}

double modular(const GridFunction& u, const ModularConfig& cfg) {
  const Mesh& mesh = u.mesh();
  const Vector exponent = mesh.qp_coords().unaryExpr(cfg.exponent);
  const Vector weight = weights_at_qp(mesh, cfg);
  check_config(exponent, weight);
  return modular_qp(mesh, interpolate_qp(mesh, u.values()), exponent, weight);
}

double luxemburg_norm(const GridFunction& u, const ModularConfig& cfg) {
  const Mesh& mesh = u.mesh();
  const Vector exponent = mesh.qp_coords().unaryExpr(cfg.exponent);
  const Vector weight = weights_at_qp(mesh, cfg);
  check_config(exponent, weight);
  return luxemburg_norm_qp(mesh, interpolate_qp(mesh, u.values()), exponent, weight, cfg.bisection_tol,
                           cfg.max_bisection_iter);
}

NormModularReport norm_modular_probe(const GridFunction& u, const ModularConfig& cfg, double slack) {
  NormModularReport rep;
  rep.norm = luxemburg_norm(u, cfg);
  if (rep.norm == 0.0) throw std::invalid_argument("norm_modular_probe: u must be nonzero");
  rep.modular = modular(u, cfg);

  // Only the quadrature points enter the discrete modular.
  const Vector exponent = u.mesh().qp_coords().unaryExpr(cfg.exponent);
  rep.r_minus = exponent.minCoeff();
  rep.r_plus = exponent.maxCoeff();

  const double dn = rep.norm - 1.0;
  const double dm = rep.modular - 1.0;
  if (std::abs(dn) <= slack || std::abs(dm) <= slack) {
    rep.sign_agreement = std::abs(dn) <= slack && std::abs(dm) <= slack;
  } else {
    rep.sign_agreement = (dn > 0.0) == (dm > 0.0);
  }

  const double a = std::pow(rep.norm, rep.r_plus);
  const double b = std::pow(rep.norm, rep.r_minus);
  const double lower = std::min(a, b);
  const double upper = std::max(a, b);
  const double tol = slack * std::max(1.0, upper);
  rep.sandwich = lower - tol <= rep.modular && rep.modular <= upper + tol;
  return rep;
}

EquivalenceRange norm_equivalence_probe(const std::vector<GridFunction>& samples, const ExponentField& ef) {
  if (samples.empty()) throw std::invalid_argument("norm_equivalence_probe: empty sample list");
  EquivalenceRange out;
  out.ratios.reserve(samples.size());
  for (const GridFunction& u : samples) {
    const Mesh& mesh = u.mesh();
    const FieldSamples fs = sample_qp(ef, mesh);
    const QpValues qv = eval_with_gradient(u);
    const Vector ones = Vector::Ones(mesh.n_qp());

    const double grad = luxemburg_norm_qp(mesh, qv.derivative, fs.p, ones);
    const double plain = luxemburg_norm_qp(mesh, qv.value, fs.p, ones);
    const double weighted = luxemburg_norm_qp(mesh, qv.value, fs.p, fs.xi);
    const double standard = plain + grad;
    if (standard == 0.0) throw std::invalid_argument("norm_equivalence_probe: zero-norm sample");
    out.ratios.push_back((grad + weighted) / standard);
  }
  out.min_ratio = *std::min_element(out.ratios.begin(), out.ratios.end());
  out.max_ratio = *std::max_element(out.ratios.begin(), out.ratios.end());
  return out;
}

}  // namespace pqlap
