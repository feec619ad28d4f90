#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fastpower/approx.hpp"
#include "fastpower/lowdisc.hpp"
#include "fastpower/numerics.hpp"

namespace fastpower {

/** Posterior probability that makes the interval Bayes factor exceed K given prior mass pi0. */
double bf_threshold(double pi0, double k);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/** Monte Carlo estimate of the prior probability that the comparison lies in the interval. */
Estimate prior_interval_prob(const DesignSpec& spec, std::size_t draws, std::uint64_t seed);

/** The per-point decision criterion on the working scale. */
struct DecisionRule {
  // interval: Pr(lower < theta < upper) >= gamma.
  // equal_tailed: Pr(theta < lower) < alpha/2 and Pr(theta > upper) < alpha/2.
  enum class Kind { interval, equal_tailed };
  Kind kind = Kind::interval;
  double gamma = 0.8;
  double alpha = 0.05;
  double lower = 0.0;
  double upper = 0.0;
  double pi0 = std::numeric_limits<double>::quiet_NaN();  // bayes_factor only

  bool satisfied(const NormalPosterior& post) const;
};

struct RuleOptions {
  std::size_t pi0_draws = 1'000'000;
};

/** Resolves the analysis type to a rule; Bayes factors become a posterior-probability threshold. */
DecisionRule resolve_rule(const PreparedDesign& design, const RuleOptions& options = {});

/**
 * Large-sample starting value: the n at which a normal model for the
 * comparison estimate, with variance fixed at its design-value level,
 * meets the rule with probability equal to the target power.
 * Throws UnattainableDesign when theta_0 is not inside the interval.
 */
double initial_n0(const PreparedDesign& design, const DecisionRule& rule);

enum class PointFlag { ok, clamped_low, clamped_high, failed };
std::string to_string(PointFlag f);

struct PointSolution {
  double root = 0.0;
  PointFlag flag = PointFlag::ok;
  int evaluations = 0;
};

struct RootTolerance {
  double x = 1e-4;   // absolute, in units of n
  double f = 1e-8;   // on the gap
};

/**
 * Smallest-n crossing of gap(n) = 0 near n_init in [2, n_max], chosen so that
 * gap(root) >= 0. Bracket failures at the ends of the range become
 * clamped_low (root 2) or clamped_high (root n_max).
 */
PointSolution solve_point(const ScalarFn& gap, double n_init, double n_max, const RootTolerance& tol);

struct CurveOptions {
  std::size_t workers = 0;  // 0 = hardware concurrency
  const std::atomic<bool>* cancel = nullptr;
  RuleOptions rule;
  double tol_x_rel = 1e-8;  // relative to n0
  double tol_f = 1e-6;
};

struct PowerCurve {
  std::vector<double> roots;          // per point, in point order
  std::vector<PointFlag> flags;
  double n0 = 0.0;
  double n_star_initial = 0.0;        // quantile before the consistency pass
  double n_star = 0.0;
  long long recommendation = 0;       // ceil(n_star)
  std::size_t reinit_count = 0;
  int consistency_passes = 0;
  std::size_t gap_evaluations = 0;
  DecisionRule rule;
  std::vector<std::string> warnings;

  std::size_t count(PointFlag f) const;
  /** Fraction of points whose root is <= n. */
  double power_at(double n) const;
};

PowerCurve power_curve(const DesignSpec& spec, const CurveOptions& options = {});
/** Equal-tailed credible interval analysis with both bounds finite. */
PowerCurve ci_power_curve(const DesignSpec& spec, const CurveOptions& options = {});

/** Direct estimate: fraction of the given points whose approximate posterior meets the rule at n. */
double power_at(const PreparedDesign& design, const DecisionRule& rule, double n, const PointSet& points);

/** (n, power) pairs of the empirical curve, evenly spaced between the smallest and largest root. */
std::vector<std::pair<double, double>> curve_grid(const PowerCurve& curve, std::size_t count = 200);

}  // namespace fastpower
