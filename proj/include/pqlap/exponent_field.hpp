#pragma once

#include "pqlap/mesh.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace pqlap {

using ScalarField = std::function<double(double)>;

// Analytic field families readable from configuration files.
struct ConstantField {
  double value = 0.0;
};
struct AffineField {
  double c0 = 0.0;
  double c1 = 0.0;  // c0 + c1 z
};
struct SinusoidField {
  double base = 0.0;
  double amp = 0.0;
  double freq = 1.0;  // base + amp sin(2 pi freq z)
};
using FieldSpec = std::variant<ConstantField, AffineField, SinusoidField>;

ScalarField make_field(const FieldSpec& spec);

/// Exponents p, q, eta, the potential xi and the reaction growth exponent r.
struct ExponentField {
  ScalarField p;
  ScalarField q;
  ScalarField eta;
  ScalarField xi;
  ScalarField r;
  int dim = 1;

  static ExponentField constant(double p, double q, double eta, double xi, double r);
};

/// Field values cached at the quadrature points of one mesh.
struct FieldSamples {
  Vector p;
  Vector q;
  Vector eta;
  Vector xi;
  Vector r;
};

FieldSamples sample_qp(const ExponentField& ef, const Mesh& mesh);

struct Bounds {
  double min = 0.0;
  double max = 0.0;
};

/// Min / max over nodes and quadrature points. Throws std::domain_error on a non-finite value.
Bounds field_bounds(const ScalarField& field, const Mesh& mesh);

/// Sobolev critical exponent N p / (N - p), or +inf when p >= N.
double critical_exponent(double p_value, int dim);

struct ValidationReport {
  bool pass = true;     // every clause
  bool h0_pass = true;  // the clauses on p, q, eta and xi alone
  std::vector<std::string> violations;
  Bounds p, q, eta, xi, r;
};

/// Checks 1 < q- <= q+ < p- <= p+, 0 < eta < 1, xi > 0 and p+ < r- <= r+ < p*(z)
/// at every sample point. Failures are reported, never thrown.
ValidationReport validate_h0_h1i(const ExponentField& ef, const Mesh& mesh);

}  // namespace pqlap
