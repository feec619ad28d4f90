#include "fastpower/powercurve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fastpower/errors.hpp"

namespace fastpower {

double bf_threshold(double pi0, double k) {
  if (!(pi0 > 0.0 && pi0 < 1.0)) throw std::invalid_argument("bf_threshold: pi0 must lie in (0, 1)");
  if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("bf_threshold: K must be positive");
  return k * pi0 / (1.0 + (k - 1.0) * pi0);
}

Estimate prior_interval_prob(const DesignSpec& spec, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw std::invalid_argument("prior_interval_prob: draws must be positive");
  validate(spec, true);
  const auto model = make_model(spec.model);
  const auto [lo, hi] = map_interval(spec.h, spec.lower, spec.upper);
  const std::size_t d = model->dim();
  std::mt19937_64 rng(seed);

  auto draw_param = [&](const ParamPrior& p) {
    if (p.kind == ParamPrior::Kind::gamma) return std::gamma_distribution<double>(p.a, 1.0 / p.b)(rng);
    const double x = std::gamma_distribution<double>(p.a, 1.0)(rng);
    const double y = std::gamma_distribution<double>(p.b, 1.0)(rng);
    return x / (x + y);
  };

  std::size_t hits = 0;
  std::vector<double> natural(d);
  for (std::size_t i = 0; i < draws; ++i) {
    double theta[2];
    bool ok = true;
    for (int j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < d; ++k) natural[k] = draw_param(spec.priors[j].params[k]);
      if (!ok) continue;
      try {
        if (!model->natural_valid(natural)) {
          ok = false;
          continue;
        }
        theta[j] = g_eval(spec.g, *model, model->to_working(natural));
      } catch (const std::exception&) {
        ok = false;  // prior draw at the edge of the parameter space
      }
    }
    if (!ok) continue;
    const double w = h_eval(spec.h, theta[0], theta[1]);
    if (w > lo && w < hi) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(draws);
  return Estimate{p, std::sqrt(p * (1.0 - p) / static_cast<double>(draws)), draws};
}

namespace {

std::optional<NormalPosterior> safe_posterior(const PreparedDesign& design, const PreparedDesign::Draw& draw, double n) {
  try {
    NormalPosterior p = design.posterior(draw, n);
    if (std::isfinite(p.mean) && std::isfinite(p.variance) && p.variance > 0.0) return p;
  } catch (const std::exception&) {
    // Degenerate approximation (e.g. g underflow at tiny n); the rule counts as not met.
  }
  return std::nullopt;
}

double lower_tail(const NormalPosterior& post, double lower) {
  if (lower == -INFINITY) return 0.0;
  return std_normal_cdf((lower - post.mean) / std::sqrt(post.variance));
}

double upper_tail(const NormalPosterior& post, double upper) {
  if (upper == INFINITY) return 0.0;
  return std_normal_sf((upper - post.mean) / std::sqrt(post.variance));
}

double interval_gap(const DecisionRule& rule, const std::optional<NormalPosterior>& post) {
  if (!post) return -rule.gamma;
  return interval_prob(*post, rule.lower, rule.upper) - rule.gamma;
}

double lower_gap(const DecisionRule& rule, const std::optional<NormalPosterior>& post) {
  return 0.5 * rule.alpha - (post ? lower_tail(*post, rule.lower) : 1.0);
}

double upper_gap(const DecisionRule& rule, const std::optional<NormalPosterior>& post) {
  return 0.5 * rule.alpha - (post ? upper_tail(*post, rule.upper) : 1.0);
}

bool satisfied_at(const PreparedDesign& design, const DecisionRule& rule, const PreparedDesign::Draw& draw, double n) {
  const auto post = safe_posterior(design, draw, n);
  return post && rule.satisfied(*post);
}

int flag_rank(PointFlag f) {
  switch (f) {
    case PointFlag::ok: return 0;
    case PointFlag::clamped_low: return 1;
    case PointFlag::clamped_high: return 2;
    case PointFlag::failed: return 3;
  }
  return 3;
}

PointSolution solve_rule_point(const PreparedDesign& design, const DecisionRule& rule, const PreparedDesign::Draw& draw,
                               double n_init, const RootTolerance& tol) {
  const double n_max = design.spec().n_max;
  if (rule.kind == DecisionRule::Kind::interval) {
    return solve_point([&](double n) { return interval_gap(rule, safe_posterior(design, draw, n)); }, n_init, n_max, tol);
  }
  const PointSolution lo =
      solve_point([&](double n) { return lower_gap(rule, safe_posterior(design, draw, n)); }, n_init, n_max, tol);
  const PointSolution hi =
      solve_point([&](double n) { return upper_gap(rule, safe_posterior(design, draw, n)); }, n_init, n_max, tol);
  PointSolution out = lo.root > hi.root ? lo : hi;
  if (lo.root == hi.root && flag_rank(lo.flag) > flag_rank(hi.flag)) out = lo;
  if (lo.flag == PointFlag::failed || hi.flag == PointFlag::failed) out.flag = PointFlag::failed;
  out.evaluations = lo.evaluations + hi.evaluations;
  return out;
}

double quantile_of(const std::vector<double>& roots, double level) {
  std::vector<double> sorted = roots;
  std::sort(sorted.begin(), sorted.end());
  return empirical_quantile(sorted, level);
}

// Probability over the sampling distribution of a normal estimate
// theta_hat ~ N(theta0, sigma^2) that theta_hat falls in [c - w, c + w].
double region_power(double theta0, double sigma, double c, double w) {
  if (!(w > 0.0)) return 0.0;
  return std_normal_cdf((c + w - theta0) / sigma) - std_normal_cdf((c - w - theta0) / sigma);
}

// Half-width w of the set of estimates whose N(estimate, sigma^2) posterior puts
// at least gamma on [c - hw, c + hw]. Returns 0 when even the midpoint fails.
double conviction_halfwidth(double hw, double sigma, double gamma) {
  auto f = [&](double w) {
    return std_normal_cdf((hw - w) / sigma) - std_normal_cdf((-hw - w) / sigma) - gamma;
  };
  if (f(0.0) <= 0.0) return 0.0;
  return brent_root(f, 0.0, hw, 1e-14 * std::max(1.0, hw), 0.0).root;
}

}  // namespace

bool DecisionRule::satisfied(const NormalPosterior& post) const {
  if (kind == Kind::interval) return interval_prob(post, lower, upper) >= gamma;
  return lower_tail(post, lower) <= 0.5 * alpha && upper_tail(post, upper) <= 0.5 * alpha;
}

DecisionRule resolve_rule(const PreparedDesign& design, const RuleOptions& options) {
  const DesignSpec& spec = design.spec();
  DecisionRule rule;
  rule.lower = design.lower();
  rule.upper = design.upper();
  switch (spec.analysis.type) {
    case AnalysisType::posterior_prob:
      rule.gamma = spec.analysis.gamma;
      break;
    case AnalysisType::bayes_factor: {
      double pi0;
      if (spec.analysis.pi0) {
        pi0 = *spec.analysis.pi0;
      } else {
        pi0 = prior_interval_prob(spec, options.pi0_draws, spec.seed ^ 0x9E3779B97F4A7C15ull).value;
        if (!(pi0 > 0.0 && pi0 < 1.0))
          throw InvalidDesign("analysis.pi0", "estimated prior probability of the interval is 0 or 1");
      }
      rule.pi0 = pi0;
      rule.gamma = bf_threshold(pi0, spec.analysis.bf_k);
      break;
    }
    case AnalysisType::credible_interval:
      rule.alpha = spec.analysis.alpha;
      if (std::isfinite(rule.lower) && std::isfinite(rule.upper)) {
        rule.kind = DecisionRule::Kind::equal_tailed;
      } else {
        // One-sided: the interval rule with gamma = 1 - alpha.
        rule.gamma = 1.0 - spec.analysis.alpha;
      }
      break;
  }
  return rule;
}

double initial_n0(const PreparedDesign& design, const DecisionRule& rule) {
  const double theta0 = design.theta0();
  const double lo = rule.lower, hi = rule.upper;
  if (!(theta0 > lo && theta0 < hi))
    throw UnattainableDesign("the comparison at the design values lies outside the interval; power tends to 0");
  const double s2 = design.unit_variance();
  const double n_max = design.spec().n_max;
  const double big_gamma = design.spec().target_power;
  const double z_target = std_normal_quantile(big_gamma);

  if (rule.kind == DecisionRule::Kind::interval && (std::isinf(lo) || std::isinf(hi))) {
    const double dist = std::isinf(lo) ? hi - theta0 : theta0 - lo;
    const double z = z_target + std_normal_quantile(rule.gamma);
    if (z <= 0.0) return 2.0;
    return std::clamp(s2 * z * z / (dist * dist), 2.0, n_max);
  }

  const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
  auto power = [&](double n) {
    const double sigma = std::sqrt(s2 / n);
    double w;
    if (rule.kind == DecisionRule::Kind::interval) {
      w = conviction_halfwidth(hw, sigma, rule.gamma);
    } else {
      w = hw - sigma * std_normal_quantile(1.0 - 0.5 * rule.alpha);
    }
    return region_power(theta0, sigma, c, w);
  };
  // Start from the one-sided approximation for the nearer bound.
  const double dist = std::min(hi - theta0, theta0 - lo);
  const double z = z_target + std_normal_quantile(rule.kind == DecisionRule::Kind::interval ? rule.gamma
                                                                                           : 1.0 - 0.5 * rule.alpha);
  const double guess = std::clamp(s2 * std::max(z, 0.5) * std::max(z, 0.5) / (dist * dist), 2.0, n_max);
  auto f = [&](double n) { return power(n) - big_gamma; };
  const BracketSearch br = expand_bracket(f, guess, 2.0, n_max);
  if (br.verdict == BracketVerdict::root_below_lo_min) return 2.0;
  if (br.verdict == BracketVerdict::root_above_hi_max) return n_max;
  return brent_root(f, br.bracket, 1e-10 * br.bracket.hi, 0.0).root;
}

std::string to_string(PointFlag f) {
  switch (f) {
    case PointFlag::ok: return "ok";
    case PointFlag::clamped_low: return "clamped_low";
    case PointFlag::clamped_high: return "clamped_high";
    case PointFlag::failed: return "failed";
  }
  return "unknown";
}

PointSolution solve_point(const ScalarFn& gap, double n_init, double n_max, const RootTolerance& tol) {
  PointSolution out;
  auto counted = [&](double n) {
    ++out.evaluations;
    return gap(n);
  };
  n_init = std::clamp(n_init, 2.0, n_max);
  try {
    const BracketSearch br = expand_bracket(counted, n_init, 2.0, n_max);
    if (br.verdict == BracketVerdict::root_below_lo_min) {
      out.root = 2.0;
      out.flag = PointFlag::clamped_low;
      return out;
    }
    if (br.verdict == BracketVerdict::root_above_hi_max) {
      out.root = n_max;
      out.flag = PointFlag::clamped_high;
      return out;
    }
    const RootResult r = brent_root(counted, br.bracket, tol.x, tol.f);
    // Report a root where the rule holds so that root <= n* implies success at n*.
    double root = r.root;
    if (r.f_root < 0.0) {
      // Step up from the Brent iterate; the far bracket end is only a fallback
      // because Brent can stop on |f| <= tol_f with a wide bracket.
      const double fallback = r.bracket.f_hi >= 0.0 && r.bracket.hi > root ? r.bracket.hi : br.bracket.hi;
      root = fallback;
      double step = std::max(tol.x, 1e-12 * r.root);
      for (int k = 0; k < 60; ++k) {
        const double x = r.root + step;
        if (x >= fallback) break;
        if (counted(x) >= 0.0) {
          root = x;
          break;
        }
        step *= 2.0;
      }
    }
    out.root = root;
  } catch (const ConvergenceError& e) {
    out.root = std::clamp(e.best(), 2.0, n_max);
    out.flag = PointFlag::failed;
  }
  return out;
}

std::size_t PowerCurve::count(PointFlag f) const { return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), f)); }

double PowerCurve::power_at(double n) const {
  if (roots.empty()) return 0.0;
  const auto hits = std::count_if(roots.begin(), roots.end(), [n](double r) { return r <= n; });
  return static_cast<double>(hits) / static_cast<double>(roots.size());
}

namespace {

PowerCurve run_curve(const PreparedDesign& design, const DecisionRule& rule, const CurveOptions& options) {
  const DesignSpec& spec = design.spec();
  PowerCurve curve;
  curve.rule = rule;
  curve.n0 = initial_n0(design, rule);
  const double n_init = std::clamp(std::ceil(curve.n0), 2.0, spec.n_max);
  const RootTolerance tol{std::max(options.tol_x_rel * curve.n0, 1e-9), options.tol_f};

  const PointSet points = sobol_points(design.point_dimension(), spec.m, spec.seed);
  std::vector<PreparedDesign::Draw> draws(spec.m);
  for (std::size_t r = 0; r < spec.m; ++r) draws[r] = design.draw(points.point(r));

  std::vector<PointSolution> sols(spec.m);
  parallel_for(
      spec.m, options.workers, [&](std::size_t r) { sols[r] = solve_rule_point(design, rule, draws[r], n_init, tol); },
      options.cancel);

  auto collect_roots = [&] {
    curve.roots.resize(spec.m);
    for (std::size_t r = 0; r < spec.m; ++r) curve.roots[r] = sols[r].root;
  };
  collect_roots();
  const double level = spec.target_power;
  curve.n_star_initial = quantile_of(curve.roots, level);

  // Consistency pass: a point whose root sits on one side of n* must agree
  // with a direct evaluation of the rule at n*; otherwise re-solve from n*.
  double n_star = curve.n_star_initial;
  std::size_t extra_evaluations = 0;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<char> sat(spec.m);
    parallel_for(
        spec.m, options.workers, [&](std::size_t r) { sat[r] = satisfied_at(design, rule, draws[r], n_star); },
        options.cancel);
    extra_evaluations += spec.m;
    std::vector<std::size_t> violators;
    for (std::size_t r = 0; r < spec.m; ++r) {
      const bool below = sols[r].root <= n_star;
      if (below != static_cast<bool>(sat[r])) violators.push_back(r);
    }
    parallel_for(
        violators.size(), options.workers,
        [&](std::size_t i) {
          const std::size_t r = violators[i];
          const int before = sols[r].evaluations;
          sols[r] = solve_rule_point(design, rule, draws[r], n_star, tol);
          sols[r].evaluations += before;
        },
        options.cancel);
    curve.reinit_count += violators.size();
    curve.consistency_passes = pass + 1;
    collect_roots();
    const double updated = quantile_of(curve.roots, level);
    const bool settled = std::abs(updated - n_star) <= tol.x;
    n_star = updated;
    if (settled) break;
  }
  curve.n_star = n_star;
  curve.recommendation = static_cast<long long>(std::ceil(n_star - 1e-9));
  curve.recommendation = std::max<long long>(curve.recommendation, 2);

  curve.flags.resize(spec.m);
  curve.gap_evaluations = extra_evaluations;
  for (std::size_t r = 0; r < spec.m; ++r) {
    curve.flags[r] = sols[r].flag;
    curve.gap_evaluations += static_cast<std::size_t>(sols[r].evaluations);
  }

  // Roots clamped at 2 are legitimate (the draw already meets the rule); only
  // failures and draws that never cross below n_max degrade the curve.
  const double m = static_cast<double>(spec.m);
  const std::size_t failed = curve.count(PointFlag::failed);
  const std::size_t high = curve.count(PointFlag::clamped_high);
  if (static_cast<double>(failed + high) > 0.01 * m) {
    std::ostringstream os;
    os << "degraded: " << failed + high << " of " << spec.m << " points did not converge inside [2, n_max] (" << failed
       << " failed, " << high << " clamped at n_max)";
    curve.warnings.push_back(os.str());
  }
  if (curve.n_star <= 2.0) curve.warnings.push_back("target power is already met at n = 2");
  return curve;
}

}  // namespace

PowerCurve power_curve(const DesignSpec& spec, const CurveOptions& options) {
  const PreparedDesign design(spec);
  return run_curve(design, resolve_rule(design, options.rule), options);
}

PowerCurve ci_power_curve(const DesignSpec& spec, const CurveOptions& options) {
  if (spec.analysis.type != AnalysisType::credible_interval)
    throw InvalidDesign("analysis.type", "credible_interval analysis required");
  if (std::isinf(spec.lower) || std::isinf(spec.upper))
    throw InvalidDesign("interval", "credible interval curves need both bounds finite; use power_curve");
  return power_curve(spec, options);
}

double power_at(const PreparedDesign& design, const DecisionRule& rule, double n, const PointSet& points) {
  if (points.dimension() != design.point_dimension())
    throw std::invalid_argument("power_at: point dimension does not match the design");
  if (points.size() == 0) throw std::invalid_argument("power_at: no points");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < points.size(); ++r)
    if (satisfied_at(design, rule, design.draw(points.point(r)), n)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(points.size());
}

std::vector<std::pair<double, double>> curve_grid(const PowerCurve& curve, std::size_t count) {
  std::vector<std::pair<double, double>> out;
  if (curve.roots.empty() || count == 0) return out;
  const auto [mn, mx] = std::minmax_element(curve.roots.begin(), curve.roots.end());
  const double lo = *mn, hi = *mx;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double n = count == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.emplace_back(n, curve.power_at(n));
  }
  return out;
}

}  // namespace fastpower
