#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>

#include "fastpower/linalg.hpp"

namespace fastpower {

double std_normal_pdf(double z);
double std_normal_cdf(double z);
/** Upper tail 1 - Phi(z), accurate for large z. */
double std_normal_sf(double z);
double std_normal_quantile(double p);

using ScalarFn = std::function<double(double)>;

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
};

struct RootResult {
  double root = 0.0;
  double f_root = 0.0;
  Bracket bracket;  // final bracket, contains root
  int evaluations = 0;
};

/**
 * Brent's method on a sign-changing bracket. f is never evaluated outside
 * [lo, hi]. Stops when the bracket is narrower than tol_x or |f| <= tol_f.
 */
RootResult brent_root(const ScalarFn& f, Bracket bracket, double tol_x, double tol_f, int max_iter = 200);

/** Convenience overload that evaluates f at both ends first. */
RootResult brent_root(const ScalarFn& f, double lo, double hi, double tol_x, double tol_f, int max_iter = 200);

enum class BracketVerdict { found, root_below_lo_min, root_above_hi_max };

struct BracketSearch {
  BracketVerdict verdict = BracketVerdict::found;
  Bracket bracket;  // valid when verdict == found
  double f_x0 = 0.0;
  int evaluations = 0;
};

/**
 * Geometric search (factor 2) from x0 for a change of sign of f within
 * [lo_min, hi_max]. Assumes f is (roughly) increasing: if f(x0) >= 0 search
 * moves down, otherwise up. When the end of the range is reached without a
 * sign change the verdict says where the root must lie.
 */
BracketSearch expand_bracket(const ScalarFn& f, double x0, double lo_min, double hi_max);

struct Objective {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;      // optional
  std::function<Matrix(const Vec&)> hessian;    // optional
};

struct MaximizeResult {
  Vec x;
  double value = 0.0;
  int iterations = 0;
  bool used_fallback = false;
};

/**
 * Newton ascent with backtracking; falls back to Nelder-Mead when the Hessian
 * is not negative definite. Converges when the gradient norm is <= tol or the
 * Newton step falls below 1e-10 (relative).
 */
MaximizeResult local_maximize(const Objective& objective, const Vec& x0, double tol = 1e-8, int max_iter = 100);

Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& x);
Matrix numeric_hessian(const std::function<double(const Vec&)>& f, const Vec& x);
Matrix numeric_jacobian_of_gradient(const std::function<Vec(const Vec&)>& grad, const Vec& x);

/** The ceil(level * m)-th order statistic of sorted values (level in (0, 1]). */
double empirical_quantile(std::span<const double> sorted_values, double level);

/**
 * Run fn(i) for i in [0, count) on up to `workers` threads. Each index is
 * handled exactly once; results must be written to per-index slots so the
 * outcome does not depend on scheduling. workers == 0 means hardware
 * concurrency. The first exception thrown is rethrown after all workers stop.
 */
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn,
                  const std::atomic<bool>* cancel = nullptr);

}  // namespace fastpower
