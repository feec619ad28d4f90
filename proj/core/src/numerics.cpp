#include "fastpower/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fastpower/errors.hpp"
#include "fastpower/special.hpp"

namespace fastpower {

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double z) {
  if (std::isnan(z)) throw std::invalid_argument("std_normal_cdf: NaN argument");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double std_normal_sf(double z) {
  if (std::isnan(z)) throw std::invalid_argument("std_normal_sf: NaN argument");
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("std_normal_quantile: p must lie in (0, 1)");
  // Work with the smaller tail so that 1 - p stays exact.
  if (p > 0.5) return std::numbers::sqrt2 * special::erfc_inv(2.0 * (1.0 - p));
  return -std::numbers::sqrt2 * special::erfc_inv(2.0 * p);
}

RootResult brent_root(const ScalarFn& f, double lo, double hi, double tol_x, double tol_f, int max_iter) {
  return brent_root(f, Bracket{lo, hi, f(lo), f(hi)}, tol_x, tol_f, max_iter);
}

RootResult brent_root(const ScalarFn& f, Bracket br, double tol_x, double tol_f, int max_iter) {
  if (!(br.lo < br.hi)) throw std::invalid_argument("brent_root: bracket must satisfy lo < hi");
  if (std::isnan(br.f_lo) || std::isnan(br.f_hi)) throw std::invalid_argument("brent_root: NaN at bracket end");
  if ((br.f_lo > 0.0 && br.f_hi > 0.0) || (br.f_lo < 0.0 && br.f_hi < 0.0))
    throw std::invalid_argument("brent_root: no sign change on bracket");

  RootResult out;
  double a = br.lo, b = br.hi, fa = br.f_lo, fb = br.f_hi;
  if (fa == 0.0 || std::abs(fa) <= tol_f) return {a, fa, Bracket{a, a, fa, fa}, 0};
  if (fb == 0.0 || std::abs(fb) <= tol_f) return {b, fb, Bracket{b, b, fb, fb}, 0};

  double c = a, fc = fa, d = b - a, e = d;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * tol_x;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0 || std::abs(fb) <= tol_f) {
      out.root = b;
      out.f_root = fb;
      out.bracket = b < c ? Bracket{b, c, fb, fc} : Bracket{c, b, fc, fb};
      return out;
    }
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
      const double min2 = std::abs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : std::copysign(tol1, xm);
    fb = f(b);
    ++out.evaluations;
    if (std::isnan(fb)) throw std::runtime_error("brent_root: function returned NaN");
  }
  throw ConvergenceError("brent_root: iteration limit reached", b);
}

BracketSearch expand_bracket(const ScalarFn& f, double x0, double lo_min, double hi_max) {
  if (!(lo_min <= x0 && x0 <= hi_max)) throw std::invalid_argument("expand_bracket: x0 outside [lo_min, hi_max]");
  BracketSearch out;
  double prev = x0;
  double f_prev = f(x0);
  out.f_x0 = f_prev;
  out.evaluations = 1;
  if (std::isnan(f_prev)) throw std::runtime_error("expand_bracket: function returned NaN");
  if (f_prev >= 0.0) {
    while (true) {
      if (prev <= lo_min) {
        out.verdict = BracketVerdict::root_below_lo_min;
        out.bracket = Bracket{lo_min, lo_min, f_prev, f_prev};
        return out;
      }
      const double x = std::max(prev / 2.0, lo_min);
      const double fx = f(x);
      ++out.evaluations;
      if (std::isnan(fx)) throw std::runtime_error("expand_bracket: function returned NaN");
      if (fx < 0.0) {
        out.bracket = Bracket{x, prev, fx, f_prev};
        return out;
      }
      prev = x;
      f_prev = fx;
    }
  }
  while (true) {
    if (prev >= hi_max) {
      out.verdict = BracketVerdict::root_above_hi_max;
      out.bracket = Bracket{hi_max, hi_max, f_prev, f_prev};
      return out;
    }
    const double x = std::min(prev * 2.0, hi_max);
    const double fx = f(x);
    ++out.evaluations;
    if (std::isnan(fx)) throw std::runtime_error("expand_bracket: function returned NaN");
    if (fx >= 0.0) {
      out.bracket = Bracket{prev, x, f_prev, fx};
      return out;
    }
    prev = x;
    f_prev = fx;
  }
}

Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

Matrix numeric_hessian(const std::function<double(const Vec&)>& f, const Vec& x) {
  const std::size_t n = x.size();
  Matrix hm(n);
  const double f0 = f(x);
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = 1e-4 * std::max(1.0, std::abs(x[i]));
  for (std::size_t i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h[i];
    xm[i] -= h[i];
    hm(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      Vec pp = x, pm = x, mp = x, mm = x;
      pp[i] += h[i]; pp[j] += h[j];
      pm[i] += h[i]; pm[j] -= h[j];
      mp[i] -= h[i]; mp[j] += h[j];
      mm[i] -= h[i]; mm[j] -= h[j];
      hm(i, j) = hm(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h[i] * h[j]);
    }
  }
  return hm;
}

Matrix numeric_jacobian_of_gradient(const std::function<Vec(const Vec&)>& grad, const Vec& x) {
  const std::size_t n = x.size();
  Matrix hm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec gp = grad(xp), gm = grad(xm);
    for (std::size_t i = 0; i < n; ++i) hm(i, j) = (gp[i] - gm[i]) / (2.0 * h);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) hm(i, j) = hm(j, i) = 0.5 * (hm(i, j) + hm(j, i));
  return hm;
}

namespace {

double safe_value(const std::function<double(const Vec&)>& f, const Vec& x) {
  const double v = f(x);
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

// Nelder-Mead on -f; used only when Newton meets an indefinite Hessian.
Vec nelder_mead_maximize(const std::function<double(const Vec&)>& f, const Vec& x0, int max_iter = 4000) {
  const std::size_t n = x0.size();
  std::vector<Vec> simplex(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += 0.1 * std::max(1.0, std::abs(x0[i]));
  for (std::size_t i = 0; i <= n; ++i) vals[i] = safe_value(f, simplex[i]);

  std::vector<std::size_t> order(n + 1);
  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double size = 0.0;
    for (std::size_t i = 0; i <= n; ++i) size = std::max(size, (simplex[i] - simplex[best]).norm());
    if (size < 1e-11 * (1.0 + simplex[best].norm())) break;

    Vec centroid(n);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst) centroid += simplex[i];
    centroid *= 1.0 / static_cast<double>(n);

    const Vec reflected = centroid + (centroid - simplex[worst]);
    const double fr = safe_value(f, reflected);
    if (fr > vals[best]) {
      const Vec expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = safe_value(f, expanded);
      if (fe > fr) {
        simplex[worst] = expanded;
        vals[worst] = fe;
      } else {
        simplex[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr > vals[second]) {
      simplex[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const Vec contracted = centroid + 0.5 * (simplex[worst] - centroid);
    const double fc = safe_value(f, contracted);
    if (fc > vals[worst]) {
      simplex[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      vals[i] = safe_value(f, simplex[i]);
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (vals[i] > vals[best]) best = i;
  return simplex[best];
}

}  // namespace

MaximizeResult local_maximize(const Objective& obj, const Vec& x0, double tol, int max_iter) {
  if (!obj.value) throw std::invalid_argument("local_maximize: objective value function required");
  auto grad = [&](const Vec& x) { return obj.gradient ? obj.gradient(x) : numeric_gradient(obj.value, x); };
  auto hess = [&](const Vec& x) {
    if (obj.hessian) return obj.hessian(x);
    if (obj.gradient) return numeric_jacobian_of_gradient(obj.gradient, x);
    return numeric_hessian(obj.value, x);
  };

  MaximizeResult res;
  res.x = x0;
  res.value = obj.value(x0);
  if (!std::isfinite(res.value)) throw OptimizationError("local_maximize: objective not finite at start");

  bool fallback_done = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    const Vec g = grad(res.x);
    if (!g.all_finite()) throw OptimizationError("local_maximize: non-finite gradient");
    if (g.norm() <= tol) return res;

    const Matrix h = hess(res.x);
    Vec step;
    bool newton_ok = h.all_finite();
    if (newton_ok) {
      try {
        step = solve_spd(-1.0 * h, g);
      } catch (const FactorizationError&) {
        newton_ok = false;
      }
    }
    if (!newton_ok) {
      if (fallback_done) throw OptimizationError("local_maximize: Hessian not negative definite after fallback");
      fallback_done = true;
      res.used_fallback = true;
      res.x = nelder_mead_maximize(obj.value, res.x);
      res.value = obj.value(res.x);
      if (!std::isfinite(res.value)) throw OptimizationError("local_maximize: fallback left the finite region");
      continue;
    }

    double t = 1.0;
    Vec trial = res.x + step;
    double f_trial = safe_value(obj.value, trial);
    while (!(f_trial >= res.value) && t > 1e-10) {
      t *= 0.5;
      trial = res.x + t * step;
      f_trial = safe_value(obj.value, trial);
    }
    const double moved = t * step.norm();
    if (f_trial >= res.value) {
      res.x = trial;
      res.value = f_trial;
    }
    if (moved <= 1e-10 * (1.0 + res.x.norm())) return res;
  }
  throw OptimizationError("local_maximize: iteration limit reached");
}

double empirical_quantile(std::span<const double> sorted_values, double level) {
  if (sorted_values.empty()) throw std::invalid_argument("empirical_quantile: empty input");
  if (!(level > 0.0 && level <= 1.0)) throw std::invalid_argument("empirical_quantile: level must lie in (0, 1]");
  const double m = static_cast<double>(sorted_values.size());
  // Guard against products like 0.6 * 1000 landing just above an integer.
  double k = std::ceil(level * m * (1.0 - 1e-12));
  k = std::clamp(k, 1.0, m);
  return sorted_values[static_cast<std::size_t>(k) - 1];
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn,
                  const std::atomic<bool>* cancel) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      if (cancel && cancel->load(std::memory_order_relaxed)) throw Cancelled();
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      if (cancel && cancel->load(std::memory_order_relaxed)) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::make_exception_ptr(Cancelled());
        stop = true;
        return;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fastpower
