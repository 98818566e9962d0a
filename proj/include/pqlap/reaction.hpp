#pragma once

#include "pqlap/exponent_field.hpp"

#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace pqlap {

enum class ReactionKind { power, power_log, custom };

using PointFunction = std::function<double(double z, double x)>;

/// The perturbation f(z, x) and its primitive F(z, x) = int_0^x f(z, s) ds.
/// Built-in kinds vanish for x <= 0.
///   power:     f = (x+)^{r(z)-1}
///   power_log: f = (x+)^{p(z)-1} ln(1 + x+)
class Reaction {
 public:
  static Reaction power(ScalarField r);
  static Reaction power_log(ScalarField p);
  /// df may be omitted; a central difference of f is used instead.
  static Reaction custom(PointFunction f, PointFunction F, PointFunction df = {});
  static Reaction zero();

  ReactionKind kind() const { return kind_; }

  double f(double z, double x) const { return f_exp(exponent(z), z, x); }
  double F(double z, double x) const { return F_exp(exponent(z), z, x); }
  double df(double z, double x) const { return df_exp(exponent(z), z, x); }

  // Exponent-parametrized forms for callers that cache r(z) or p(z) per point.
  // The exponent argument is ignored for custom reactions.
  double exponent(double z) const { return exponent_ ? exponent_(z) : 0.0; }
  double f_exp(double e, double z, double x) const;
  double F_exp(double e, double z, double x) const;
  double df_exp(double e, double z, double x) const;

  std::optional<double> ar_theta;
  std::optional<double> ar_M;

 private:
  ReactionKind kind_ = ReactionKind::custom;
  ScalarField exponent_;
  PointFunction f_, F_, df_;
};

std::pair<double, double> eval_f_F(const Reaction& reaction, double z, double x);

struct ArProbeResult {
  bool holds_on_grid = true;
  std::optional<double> first_violation;  // x of the first failing sample
};

/// Checks 0 < theta F(z,x) <= f(z,x) x on the sampled (z, x) grid (x >= M).
ArProbeResult ar_probe(const Reaction& reaction, double theta, double M, const std::vector<double>& x_grid,
                       const std::vector<double>& z_samples);

/// Geometric grid M, M*ratio, ... up to and including x_max.
std::vector<double> geometric_grid(double start, double stop, double ratio);

struct QuasimonoPair {
  double z = 0.0;
  double x = 0.0;
  double y = 0.0;  // x <= y
};

/// max over pairs of xi_lambda(z, x) - xi_lambda(z, y) where
/// xi_lambda(z, x) = (1 - p+/(1 - eta(z))) x^{1-eta(z)} + lambda [f(z,x) x - p+ F(z,x)].
/// A value <= 0 means the monotone form held on every pair.
double quasimono_probe(const Reaction& reaction, double lambda, const ExponentField& ef, double p_plus,
                       const std::vector<QuasimonoPair>& pairs);

/// True iff x -> f(z,x) + xi_hat x^{p(z)-1} is nondecreasing along grid for all sampled z.
bool shifted_monotone_probe(const Reaction& reaction, const ExponentField& ef, double rho, double xi_hat,
                            const std::vector<double>& grid, const std::vector<double>& z_samples);

struct MuHat {
  double value = 0.0;
  bool valid = false;  // false when the sampled minimum is <= 0
};

/// Minimum of f over the sampled (z, x) with x >= s.
MuHat mu_hat_estimate(const Reaction& reaction, double s, const std::vector<double>& grid,
                      const std::vector<double>& z_samples);

struct ShiftEstimate {
  double rho = 0.0;
  double xi_hat = 0.0;
  std::map<double, double> mu_hat;
};

/// Smallest doubling candidate 1, 2, 4, ... passing shifted_monotone_probe on [0, rho].
ShiftEstimate estimate_shift(const Reaction& reaction, const ExponentField& ef, double rho,
                             const std::vector<double>& z_samples, int grid_points = 2001);

}  // namespace pqlap
