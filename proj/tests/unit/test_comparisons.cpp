#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fastpower/comparisons.hpp"
#include "fastpower/errors.hpp"
#include "oracles.hpp"

using namespace fastpower;

namespace {

ParamVector log_params(double a, double b) { return Vec{std::log(a), std::log(b)}; }

double weibull_tail(double nu, double lam, double kappa) { return std::exp(-std::pow(kappa / lam, nu)); }

}  // namespace

TEST(GEval, GammaTailMatchesIncompleteGammaOracle) {
  const auto g = make_model(Family::gamma);
  const GSpec spec{GSpec::Kind::tail_prob, 4.29};
  for (auto [a, b] : {std::pair{2.11, 0.69}, {2.43, 0.79}, {0.5, 3.0}, {40.0, 9.0}}) {
    const double ref = oracle::gamma_q(a, b * 4.29);
    EXPECT_NEAR(g_eval(spec, *g, log_params(a, b)), ref, 1e-12) << a << " " << b;
  }
}

TEST(GEval, WeibullTailClosedForm) {
  const auto w = make_model(Family::weibull);
  const GSpec spec{GSpec::Kind::tail_prob, 4.29};
  EXPECT_NEAR(g_eval(spec, *w, log_params(1.41, 3.39)), weibull_tail(1.41, 3.39, 4.29), 1e-15);
}

TEST(GEval, IdentityReturnsTheProbability) {
  const auto b = make_model(Family::bernoulli);
  const GSpec spec{};
  EXPECT_NEAR(g_eval(spec, *b, Vec{std::log(0.15 / 0.85)}), 0.15, 1e-15);
}

TEST(GGrad, AnalyticAgreesWithCentralDifferencesOfTheOracle) {
  const auto g = make_model(Family::gamma);
  const auto w = make_model(Family::weibull);
  const GSpec spec{GSpec::Kind::tail_prob, 4.29};
  std::mt19937_64 rng(4);
  // Ranges keep the tail probability away from 0 so the gradient is not degenerate.
  std::uniform_real_distribution<double> shape(0.4, 8.0), rate(0.05, 1.5), wshape(0.4, 2.5), wscale(2.0, 8.0);
  for (int t = 0; t < 100; ++t) {
    const double a = shape(rng), b = rate(rng);
    const ParamVector e = log_params(a, b);
    const double h = 1e-6;
    // Gamma: shape derivative of Q(exp(e0), exp(e1) kappa) by differencing the oracle.
    const Vec gg = g_grad(spec, *g, e);
    const double d0 = (oracle::gamma_q(std::exp(e[0] + h), b * 4.29) - oracle::gamma_q(std::exp(e[0] - h), b * 4.29)) / (2 * h);
    const double d1 = (oracle::gamma_q(a, std::exp(e[1] + h) * 4.29) - oracle::gamma_q(a, std::exp(e[1] - h) * 4.29)) / (2 * h);
    EXPECT_NEAR(gg[0], d0, 1e-6 + 1e-5 * std::abs(d0));
    EXPECT_NEAR(gg[1], d1, 1e-6 + 1e-5 * std::abs(d1));
    const double c = wshape(rng), l = wscale(rng);
    const ParamVector ew = log_params(c, l);
    const Vec gw = g_grad(spec, *w, ew);
    const double w0 = (weibull_tail(std::exp(ew[0] + h), l, 4.29) - weibull_tail(std::exp(ew[0] - h), l, 4.29)) / (2 * h);
    const double w1 = (weibull_tail(c, std::exp(ew[1] + h), 4.29) - weibull_tail(c, std::exp(ew[1] - h), 4.29)) / (2 * h);
    EXPECT_NEAR(gw[0], w0, 1e-7 + 1e-6 * std::abs(w0));
    EXPECT_NEAR(gw[1], w1, 1e-7 + 1e-6 * std::abs(w1));
  }
}

TEST(GGrad, WeibullWithUnitShapeIsExponential) {
  const auto w = make_model(Family::weibull);
  const GSpec spec{GSpec::Kind::tail_prob, 2.0};
  const double lam = 3.0;
  const Vec gw = g_grad(spec, *w, log_params(1.0, lam));
  EXPECT_NEAR(gw[1], std::exp(-2.0 / lam) * 2.0 / lam, 1e-14);
  // d/d log nu of exp(-(k/l)^nu) at nu = 1: -exp(-r) r log r
  const double r = 2.0 / lam;
  EXPECT_NEAR(gw[0], -std::exp(-r) * r * std::log(r), 1e-14);
}

TEST(GGrad, NumericModeMatchesAnalytic) {
  const auto w = make_model(Family::weibull);
  GSpec a{GSpec::Kind::tail_prob, 4.29};
  GSpec n = a;
  n.gradient = GSpec::Gradient::numeric;
  const ParamVector e = log_params(1.49, 3.42);
  const Vec ga = g_grad(a, *w, e), gn = g_grad(n, *w, e);
  EXPECT_NEAR(ga[0], gn[0], 1e-8);
  EXPECT_NEAR(ga[1], gn[1], 1e-8);
}

TEST(GGrad, DegenerateGradientIsReported) {
  // Far out in the tail every component underflows.
  const auto g = make_model(Family::gamma);
  const GSpec spec{GSpec::Kind::tail_prob, 4.29};
  EXPECT_THROW(g_grad(spec, *g, log_params(0.5, 400.0)), DegenerateGradient);
}

TEST(CheckG, RejectsMismatches) {
  const auto g = make_model(Family::gamma);
  const auto b = make_model(Family::bernoulli);
  EXPECT_THROW(check_g(GSpec{}, *g), InvalidDesign);
  EXPECT_THROW(check_g(GSpec{GSpec::Kind::tail_prob, 1.0}, *b), InvalidDesign);
  EXPECT_THROW(check_g(GSpec{GSpec::Kind::tail_prob, -1.0}, *g), InvalidDesign);
  GSpec bad_step{GSpec::Kind::tail_prob, 1.0};
  bad_step.step = 0.5;
  try {
    check_g(bad_step, *g);
    FAIL();
  } catch (const InvalidDesign& e) {
    EXPECT_EQ(e.field(), "g.step");
  }
  EXPECT_NO_THROW(check_g(GSpec{}, *b));
}

TEST(Comparison, WorkingScaleForms) {
  EXPECT_DOUBLE_EQ(h_eval(HKind::difference, 0.3, 0.1), 0.2);
  EXPECT_DOUBLE_EQ(h_eval(HKind::ratio, 0.3, 0.1), std::log(3.0));
  EXPECT_NEAR(h_eval(HKind::proportion_difference, 0.15, 0.14), std::log(1.01 / 0.99), 1e-14);
  EXPECT_DOUBLE_EQ(h_natural(HKind::ratio, 0.3, 0.1), 3.0);
}

TEST(Comparison, GradientMatchesDifferences) {
  for (HKind h : {HKind::difference, HKind::ratio, HKind::proportion_difference}) {
    const double t1 = 0.23, t2 = 0.19, e = 1e-7;
    const auto [d1, d2] = h_grad(h, t1, t2);
    EXPECT_NEAR(d1, (h_eval(h, t1 + e, t2) - h_eval(h, t1 - e, t2)) / (2 * e), 1e-6);
    EXPECT_NEAR(d2, (h_eval(h, t1, t2 + e) - h_eval(h, t1, t2 - e)) / (2 * e), 1e-6);
  }
}

TEST(WorkingTransform, MonotoneAndInvertible) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (HKind h : {HKind::difference, HKind::ratio, HKind::proportion_difference}) {
    for (int t = 0; t < 1000; ++t) {
      double a = u(rng), b = u(rng);
      if (h == HKind::difference) a = 10 * a - 5, b = 10 * b - 5;
      if (h == HKind::ratio) a *= 5, b *= 5;
      if (h == HKind::proportion_difference) a = 2 * a - 1, b = 2 * b - 1;
      if (a > b) std::swap(a, b);
      ASSERT_LE(working_transform(h, a), working_transform(h, b));
      EXPECT_NEAR(inverse_working_transform(h, working_transform(h, a)), a, 1e-12 * std::max(1.0, std::abs(a)));
    }
  }
  EXPECT_EQ(working_transform(HKind::ratio, 0.0), -INFINITY);
  EXPECT_EQ(working_transform(HKind::proportion_difference, 1.0), INFINITY);
  EXPECT_EQ(working_transform(HKind::difference, -INFINITY), -INFINITY);
}

TEST(WorkingTransform, ProportionDifferenceMatchesTheLogOddsForm) {
  for (double x : {-0.9, -0.05, 0.0, 0.05, 0.5}) EXPECT_NEAR(working_transform(HKind::proportion_difference, x), std::log((1 + x) / (1 - x)), 1e-14);
}

TEST(MapInterval, Errors) {
  EXPECT_THROW(map_interval(HKind::ratio, 1.25, 0.8), InvalidDesign);
  EXPECT_THROW(map_interval(HKind::ratio, 1.0, 1.0), InvalidDesign);
  EXPECT_THROW(map_interval(HKind::ratio, -1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(map_interval(HKind::proportion_difference, -0.5, 1.5), std::invalid_argument);
  EXPECT_THROW(working_transform(HKind::difference, NAN), std::invalid_argument);
  const auto [lo, hi] = map_interval(HKind::ratio, 0.8, 1.25);
  EXPECT_NEAR(lo, -hi, 1e-15);
  EXPECT_THROW(hkind_from_string("odds"), InvalidDesign);
}
