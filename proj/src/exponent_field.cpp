#include "pqlap/exponent_field.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pqlap {

ScalarField make_field(const FieldSpec& spec) {
  return std::visit(
      [](const auto& s) -> ScalarField {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantField>) {
          return [v = s.value](double) { return v; };
        } else if constexpr (std::is_same_v<T, AffineField>) {
          return [c0 = s.c0, c1 = s.c1](double z) { return c0 + c1 * z; };
        } else {
          return [b = s.base, a = s.amp, f = s.freq](double z) {
            return b + a * std::sin(2.0 * std::numbers::pi * f * z);
          };
        }
      },
      spec);
}

ExponentField ExponentField::constant(double p, double q, double eta, double xi, double r) {
  return {make_field(ConstantField{p}), make_field(ConstantField{q}), make_field(ConstantField{eta}),
          make_field(ConstantField{xi}), make_field(ConstantField{r}), 1};
}

FieldSamples sample_qp(const ExponentField& ef, const Mesh& mesh) {
  const Vector& z = mesh.qp_coords();
  return {z.unaryExpr(ef.p), z.unaryExpr(ef.q), z.unaryExpr(ef.eta), z.unaryExpr(ef.xi), z.unaryExpr(ef.r)};
}

Bounds field_bounds(const ScalarField& field, const Mesh& mesh) {
  const Vector values = mesh.sample_points().unaryExpr(field);
  if (!values.allFinite()) throw std::domain_error("field_bounds: non-finite field value");
  return {values.minCoeff(), values.maxCoeff()};
}

double critical_exponent(double p_value, int dim) {
  if (!(p_value > 1.0) || dim < 1) throw std::invalid_argument("critical_exponent: need p > 1 and dim >= 1");
  const double n = static_cast<double>(dim);
  if (p_value < n) return n * p_value / (n - p_value);
  return std::numeric_limits<double>::infinity();
}

ValidationReport validate_h0_h1i(const ExponentField& ef, const Mesh& mesh) {
  ValidationReport rep;
  const auto fail = [&rep](const char* clause, bool h0 = true) {
    rep.pass = false;
    if (h0) rep.h0_pass = false;
    rep.violations.emplace_back(clause);
  };

  try {
    rep.p = field_bounds(ef.p, mesh);
    rep.q = field_bounds(ef.q, mesh);
    rep.eta = field_bounds(ef.eta, mesh);
    rep.xi = field_bounds(ef.xi, mesh);
    rep.r = field_bounds(ef.r, mesh);
  } catch (const std::domain_error&) {
    fail("finite field values");
    return rep;
  }

  if (!(rep.q.min > 1.0)) fail("1<q_-");
  if (!(rep.q.max < rep.p.min)) fail("q_+<p_-");
  if (!(rep.eta.min > 0.0)) fail("0<eta(z)");
  if (!(rep.eta.max < 1.0)) fail("eta(z)<1");
  if (!(rep.xi.min > 0.0)) fail("xi(z)>0");
  if (!(rep.p.max < rep.r.min)) fail("p_+<r_-", false);

  // r_+ < p*(z) must hold pointwise, not just against min p*.
  if (rep.p.min > 1.0) {
    for (const double z : mesh.sample_points()) {
      if (!(rep.r.max < critical_exponent(ef.p(z), ef.dim))) {
        fail("r_+<p*(z)", false);
        break;
      }
    }
  }
  return rep;
}

}  // namespace pqlap
