#include "pqlap/reaction.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pqlap;

namespace {
const std::vector<double> kZ{0.0, 0.25, 0.5, 0.75, 1.0};
Reaction f1(double r = 5.0) { return Reaction::power(make_field(ConstantField{r})); }
Reaction f2(double p = 3.0) { return Reaction::power_log(make_field(ConstantField{p})); }
}  // namespace

TEST(Reaction, PowerValues) {
  const auto [f, F] = eval_f_F(f1(), 0.3, 0.5);
  EXPECT_DOUBLE_EQ(f, 0.0625);
  EXPECT_DOUBLE_EQ(F, 0.00625);
}

TEST(Reaction, VanishesOnNegativeAxis) {
  for (const Reaction& r : {f1(), f2()}) {
    const auto [f, F] = eval_f_F(r, 0.5, -3.0);
    EXPECT_EQ(f, 0.0);
    EXPECT_EQ(F, 0.0);
    EXPECT_EQ(r.F(0.5, 0.0), 0.0);
  }
}

TEST(Reaction, PowerLogPrimitiveClosedForm) {
  // int_0^1 s^2 ln(1+s) ds = 2 ln2 / 3 - 5/18
  EXPECT_NEAR(f2().F(0.2, 1.0), 2.0 * std::log(2.0) / 3.0 - 5.0 / 18.0, 1e-8);
  const double simpson = oracle::simpson([](double s) { return std::pow(s, 2.2) * std::log1p(s); }, 0.0, 7.0, 200000);
  EXPECT_NEAR(f2(3.2).F(0.0, 7.0), simpson, 1e-8 * simpson);
}

TEST(Reaction, PrimitiveDerivativeMatchesF) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> xd(0.05, 20.0), zd(0.0, 1.0);
  const ScalarField r = make_field(AffineField{4.0, 1.5});
  const ScalarField p = make_field(SinusoidField{3.0, 0.3, 1.0});
  for (const Reaction& re : {Reaction::power(r), Reaction::power_log(p)}) {
    for (int i = 0; i < 50; ++i) {
      const double x = xd(rng), z = zd(rng);
      const double h = 1e-5 * x;
      const double fd = (re.F(z, x + h) - re.F(z, x - h)) / (2.0 * h);
      EXPECT_NEAR(fd, re.f(z, x), 1e-6 * re.f(z, x));
      const double dfd = (re.f(z, x + h) - re.f(z, x - h)) / (2.0 * h);
      EXPECT_NEAR(dfd, re.df(z, x), 1e-6 * std::abs(re.df(z, x)) + 1e-12);
    }
  }
}

TEST(Reaction, Superlinear) {
  for (const Reaction& re : {f1(), f2()}) {
    double prev = 0.0;
    for (const double x : {1e1, 1e2, 1e3, 1e4}) {
      const double ratio = re.F(0.5, x) / std::pow(x, 3.0);
      EXPECT_GT(ratio, prev);
      prev = ratio;
    }
    EXPECT_GT(prev, 1.0);
  }
}

TEST(ArProbe, PowerHoldsWithEquality) {
  const ArProbeResult res = ar_probe(f1(), 5.0, 1.0, geometric_grid(1.0, 1e6, 1.5), kZ);
  EXPECT_TRUE(res.holds_on_grid);
  EXPECT_FALSE(res.first_violation.has_value());
}

TEST(ArProbe, PowerLogFailsAtLargeX) {
  const ArProbeResult res = ar_probe(f2(), 3.5, 1.0, geometric_grid(1.0, 1e6, 1.5), kZ);
  EXPECT_FALSE(res.holds_on_grid);
  ASSERT_TRUE(res.first_violation.has_value());
  // Independent check of the ratio f x / F at the reported point.
  const double x = *res.first_violation;
  const double F = oracle::simpson([](double s) { return s * s * std::log1p(s); }, 0.0, x, 400000);
  EXPECT_LT(x * x * std::log1p(x) * x / F, 3.5);
}

TEST(ArProbe, PowerFailsAboveExponent) {
  EXPECT_FALSE(ar_probe(f1(), 6.0, 1.0, geometric_grid(1.0, 100.0, 2.0), kZ).holds_on_grid);
}

TEST(ArProbe, GridBelowMRejected) {
  EXPECT_THROW(ar_probe(f1(), 5.0, 1.0, {0.5, 2.0}, kZ), std::invalid_argument);
}

TEST(Quasimono, EqualPairs) {
  const ExponentField ef = ExponentField::constant(3, 2, 0.5, 1, 5);
  EXPECT_EQ(quasimono_probe(f1(), 1.0, ef, 3.0, {{0.2, 1.5, 1.5}, {0.7, 3.0, 3.0}}), 0.0);
}

TEST(Quasimono, PowerIncreasingPair) {
  const ExponentField ef = ExponentField::constant(3, 2, 0.5, 1, 5);
  const double excess = quasimono_probe(f1(), 1.0, ef, 3.0, {{0.5, 1.0, 2.0}});
  // Closed form: xi(x) = -5 x^{1/2} + (2/5) x^5
  const auto xi = [](double x) { return -5.0 * std::sqrt(x) + 0.4 * std::pow(x, 5.0); };
  EXPECT_NEAR(excess, xi(1.0) - xi(2.0), 1e-12);
  EXPECT_LE(excess, 0.0);
}

TEST(Quasimono, LambdaZeroReportsBound) {
  const ExponentField ef = ExponentField::constant(3, 2, 0.5, 1, 5);
  EXPECT_NEAR(quasimono_probe(f1(), 0.0, ef, 3.0, {{0.5, 1.0, 4.0}}), 5.0, 1e-12);
}

TEST(Quasimono, UnorderedPairRejected) {
  const ExponentField ef = ExponentField::constant(3, 2, 0.5, 1, 5);
  EXPECT_THROW(quasimono_probe(f1(), 1.0, ef, 3.0, {{0.5, 2.0, 1.0}}), std::invalid_argument);
}

TEST(ShiftedMonotone, Examples) {
  const ExponentField ef = ExponentField::constant(3, 2, 0.5, 1, 5);
  std::vector<double> grid;
  for (int i = 0; i <= 1000; ++i) grid.push_back(i / 1000.0);
  EXPECT_TRUE(shifted_monotone_probe(f1(), ef, 1.0, 0.1, grid, kZ));

  const Reaction hump = Reaction::custom([](double, double x) { return std::max(0.0, x * (1.0 - x)); },
                                         [](double, double x) {
                                           const double y = std::clamp(x, 0.0, 1.0);
                                           return y * y / 2.0 - y * y * y / 3.0;
                                         });
  EXPECT_FALSE(shifted_monotone_probe(hump, ef, 1.0, 0.0, grid, kZ));
  // f' + xi_hat (p-1) x^{p-2} = 1 - 2x + 2 xi_hat x >= 0 on [0,1] iff xi_hat >= 1/2.
  EXPECT_TRUE(shifted_monotone_probe(hump, ef, 1.0, 1.0, grid, kZ));
  EXPECT_FALSE(shifted_monotone_probe(hump, ef, 1.0, 0.4, grid, kZ));

  const ShiftEstimate est = estimate_shift(hump, ef, 1.0, kZ);
  EXPECT_EQ(est.xi_hat, 1.0);
  // the hump vanishes for x >= 1, so its infimum beyond any s is zero
  EXPECT_EQ(est.mu_hat.at(0.25), 0.0);
}

TEST(MuHat, Examples) {
  EXPECT_NEAR(mu_hat_estimate(f1(), 1.0, geometric_grid(1.0, 100.0, 1.2), kZ).value, 1.0, 1e-15);
  EXPECT_NEAR(mu_hat_estimate(f1(), 0.5, geometric_grid(0.5, 100.0, 1.2), kZ).value, 0.0625, 1e-15);
  const MuHat m2 = mu_hat_estimate(f2(), 1.0, geometric_grid(1.0, 100.0, 1.2), kZ);
  EXPECT_NEAR(m2.value, std::log(2.0), 1e-12);
  EXPECT_TRUE(m2.valid);
  EXPECT_FALSE(mu_hat_estimate(Reaction::zero(), 1.0, {1.0, 2.0}, kZ).valid);
}
