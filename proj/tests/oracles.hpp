#pragma once

// Independent scalar oracles used to freeze expected values. Nothing here
// touches the library's assembly or solver code paths.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

/// Root of f on [lo, hi] by plain bisection; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-15) {
  double flo = f(lo);
  if (flo * f(hi) > 0.0) throw std::runtime_error("oracle::bisect: root not bracketed");
  for (int i = 0; i < 400 && hi - lo > tol * (1.0 + std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// All sign-change roots of f on a uniform scan of [lo, hi], each refined by bisection.
inline std::vector<double> scan_roots(const std::function<double(double)>& f, double lo, double hi, int n = 20000) {
  std::vector<double> roots;
  double x0 = lo;
  double f0 = f(x0);
  for (int i = 1; i <= n; ++i) {
    const double x1 = lo + (hi - lo) * i / n;
    const double f1 = f(x1);
    if (f0 == 0.0) roots.push_back(x0);
    else if (f0 * f1 < 0.0) roots.push_back(bisect(f, x0, x1));
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

/// Maximizer of a unimodal f on [lo, hi] by golden-section search.
inline std::pair<double, double> golden_max(const std::function<double(double)>& f, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 300; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * i);
  return s * h / 3.0;
}

// Constant-coefficient benchmark: constant u solves the discrete Neumann
// problem iff xi u^{p-1} = u^{-eta} + lambda u^{r-1}.
inline double benchmark_gap(double u, double xi, double p, double eta, double lambda, double r) {
  return xi * std::pow(u, p - 1.0) - std::pow(u, -eta) - lambda * std::pow(u, r - 1.0);
}

}  // namespace oracle
