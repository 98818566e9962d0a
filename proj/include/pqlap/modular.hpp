#pragma once

#include "pqlap/exponent_field.hpp"
#include "pqlap/mesh.hpp"

#include <optional>
#include <vector>

namespace pqlap {

struct ModularConfig {
  ScalarField exponent;
  std::optional<ScalarField> weight;  // defaults to 1
  double bisection_tol = 1e-12;       // relative, on the norm
  int max_bisection_iter = 200;
};

// Quadrature-level kernels, shared by the GridFunction overloads and by the
// gradient norms used in the norm-equivalence probe.
double modular_qp(const Mesh& mesh, const Vector& values, const Vector& exponent, const Vector& weight);
double luxemburg_norm_qp(const Mesh& mesh, const Vector& values, const Vector& exponent, const Vector& weight,
                         double rel_tol = 1e-12, int max_iter = 200);

/// Integral of weight(z) |u(z)|^{exponent(z)}.
double modular(const GridFunction& u, const ModularConfig& cfg);

/// The unique lambda > 0 with modular(u / lambda) = 1, or 0 for u = 0.
/// Throws std::runtime_error when bisection does not converge.
double luxemburg_norm(const GridFunction& u, const ModularConfig& cfg);

struct NormModularReport {
  double norm = 0.0;
  double modular = 0.0;
  double r_minus = 0.0;
  double r_plus = 0.0;
  bool sign_agreement = false;  // sign(norm - 1) == sign(modular - 1)
  bool sandwich = false;        // norm^{r+} <= modular <= norm^{r-} (norm < 1), mirrored for norm > 1
  bool holds() const { return sign_agreement && sandwich; }
};

/// Checks the norm/modular relations with an absolute slack. Requires u != 0.
NormModularReport norm_modular_probe(const GridFunction& u, const ModularConfig& cfg, double slack = 1e-9);

/// |u| = ||Du||_{p} + ||u||_{L^p(xi)} measured against ||u|| = ||u||_p + ||Du||_p.
struct EquivalenceRange {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

EquivalenceRange norm_equivalence_probe(const std::vector<GridFunction>& samples, const ExponentField& ef);

}  // namespace pqlap
