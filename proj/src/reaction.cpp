#include "pqlap/reaction.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pqlap {

Reaction Reaction::power(ScalarField r) {
  Reaction out;
  out.kind_ = ReactionKind::power;
  out.exponent_ = std::move(r);
  return out;
}

Reaction Reaction::power_log(ScalarField p) {
  Reaction out;
  out.kind_ = ReactionKind::power_log;
  out.exponent_ = std::move(p);
  return out;
}

Reaction Reaction::custom(PointFunction f, PointFunction F, PointFunction df) {
  if (!f || !F) throw std::invalid_argument("Reaction::custom: f and F are required");
  Reaction out;
  out.kind_ = ReactionKind::custom;
  out.f_ = std::move(f);
  out.F_ = std::move(F);
  out.df_ = std::move(df);
  return out;
}

Reaction Reaction::zero() {
  const auto nil = [](double, double) { return 0.0; };
  return custom(nil, nil, nil);
}

double Reaction::f_exp(double e, double z, double x) const {
  switch (kind_) {
    case ReactionKind::power:
      return x > 0.0 ? std::pow(x, e - 1.0) : 0.0;
    case ReactionKind::power_log:
      return x > 0.0 ? std::pow(x, e - 1.0) * std::log1p(x) : 0.0;
    case ReactionKind::custom:
      return f_(z, x);
  }
  return 0.0;
}

double Reaction::F_exp(double e, double z, double x) const {
  switch (kind_) {
    case ReactionKind::power:
      return x > 0.0 ? std::pow(x, e) / e : 0.0;
    case ReactionKind::power_log: {
      if (x <= 0.0) return 0.0;
      using boost::math::quadrature::gauss_kronrod;
      const auto integrand = [e](double s) { return std::pow(s, e - 1.0) * std::log1p(s); };
      // a 1e-14 request sits at roundoff and can drive the recursion to full depth
      return gauss_kronrod<double, 21>::integrate(integrand, 0.0, x, 15, 1e-12);
    }
    case ReactionKind::custom:
      return F_(z, x);
  }
  return 0.0;
}

double Reaction::df_exp(double e, double z, double x) const {
  switch (kind_) {
    case ReactionKind::power:
      return x > 0.0 ? (e - 1.0) * std::pow(x, e - 2.0) : 0.0;
    case ReactionKind::power_log:
      if (x <= 0.0) return 0.0;
      return (e - 1.0) * std::pow(x, e - 2.0) * std::log1p(x) + std::pow(x, e - 1.0) / (1.0 + x);
    case ReactionKind::custom: {
      if (df_) return df_(z, x);
      const double h = 1e-6 * (1.0 + std::abs(x));
      return (f_(z, x + h) - f_(z, x - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

std::pair<double, double> eval_f_F(const Reaction& reaction, double z, double x) {
  return {reaction.f(z, x), reaction.F(z, x)};
}

std::vector<double> geometric_grid(double start, double stop, double ratio) {
  if (!(start > 0.0) || !(ratio > 1.0) || stop < start) throw std::invalid_argument("geometric_grid: bad range");
  std::vector<double> out;
  for (double x = start; x < stop; x *= ratio) out.push_back(x);
  out.push_back(stop);
  return out;
}

ArProbeResult ar_probe(const Reaction& reaction, double theta, double M, const std::vector<double>& x_grid,
                       const std::vector<double>& z_samples) {
  if (!(theta > 0.0) || !(M > 0.0)) throw std::invalid_argument("ar_probe: theta and M must be positive");
  ArProbeResult res;
  for (const double x : x_grid) {
    if (x < M) throw std::invalid_argument("ar_probe: grid must lie in [M, inf)");
    for (const double z : z_samples) {
      const auto [f, F] = eval_f_F(reaction, z, x);
      const double lhs = theta * F;
      const double rhs = f * x;
      // Relative slack keeps exact equality (pure powers with theta = r) from failing on rounding.
      const bool ok = lhs > 0.0 && lhs <= rhs * (1.0 + 1e-12);
      if (!ok) {
        res.holds_on_grid = false;
        res.first_violation = x;
        return res;
      }
    }
  }
  return res;
}

double quasimono_probe(const Reaction& reaction, double lambda, const ExponentField& ef, double p_plus,
                       const std::vector<QuasimonoPair>& pairs) {
  const auto xi_lambda = [&](double z, double x) {
    const double eta = ef.eta(z);
    const auto [f, F] = eval_f_F(reaction, z, x);
    return (1.0 - p_plus / (1.0 - eta)) * std::pow(x, 1.0 - eta) + lambda * (f * x - p_plus * F);
  };
  double worst = -std::numeric_limits<double>::infinity();
  for (const QuasimonoPair& pr : pairs) {
    if (!(0.0 <= pr.x && pr.x <= pr.y)) throw std::invalid_argument("quasimono_probe: need 0 <= x <= y");
    worst = std::max(worst, xi_lambda(pr.z, pr.x) - xi_lambda(pr.z, pr.y));
  }
  return worst;
}

bool shifted_monotone_probe(const Reaction& reaction, const ExponentField& ef, double rho, double xi_hat,
                            const std::vector<double>& grid, const std::vector<double>& z_samples) {
  if (!(rho > 0.0)) throw std::invalid_argument("shifted_monotone_probe: rho must be positive");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i - 1] < grid[i]) || grid[i - 1] < 0.0 || grid[i] > rho)
      throw std::invalid_argument("shifted_monotone_probe: grid must be increasing inside [0, rho]");
  }
  for (const double z : z_samples) {
    const double e = reaction.exponent(z);
    const double p = ef.p(z);
    double prev = -std::numeric_limits<double>::infinity();
    for (const double x : grid) {
      const double v = reaction.f_exp(e, z, x) + xi_hat * std::pow(x, p - 1.0);
      if (v < prev - 1e-13 * std::max(1.0, std::abs(prev))) return false;
      prev = v;
    }
  }
  return true;
}

MuHat mu_hat_estimate(const Reaction& reaction, double s, const std::vector<double>& grid,
                      const std::vector<double>& z_samples) {
  if (!(s > 0.0)) throw std::invalid_argument("mu_hat_estimate: s must be positive");
  double m = std::numeric_limits<double>::infinity();
  for (const double x : grid) {
    if (x < s) throw std::invalid_argument("mu_hat_estimate: grid must lie in [s, inf)");
    for (const double z : z_samples) m = std::min(m, reaction.f(z, x));
  }
  return {m, m > 0.0};
}

ShiftEstimate estimate_shift(const Reaction& reaction, const ExponentField& ef, double rho,
                             const std::vector<double>& z_samples, int grid_points) {
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) grid[static_cast<std::size_t>(i)] = rho * i / (grid_points - 1);

  ShiftEstimate est;
  est.rho = rho;
  double candidate = 1.0;
  for (int k = 0; k < 200 && !shifted_monotone_probe(reaction, ef, rho, candidate, grid, z_samples); ++k)
    candidate *= 2.0;
  est.xi_hat = candidate;

  for (const double frac : {0.25, 0.5, 1.0}) {
    const double s = frac * rho;
    est.mu_hat[s] = mu_hat_estimate(reaction, s, geometric_grid(s, 10.0 * std::max(1.0, rho), 1.1), z_samples).value;
  }
  return est;
}

}  // namespace pqlap
