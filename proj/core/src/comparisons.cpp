#include "fastpower/comparisons.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "fastpower/errors.hpp"
#include "fastpower/special.hpp"

namespace fastpower {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegenerateTol = 1e-12;

double g_value(const GSpec& g, const Model& model, const ParamVector& eta) {
  if (g.kind == GSpec::Kind::identity) return model.to_natural(eta)[0];
  switch (model.family()) {
    case Family::gamma: {
      // Pr(Y > kappa) = Q(alpha, beta * kappa)
      return special::gamma_q(std::exp(eta[0]), std::exp(eta[1]) * g.threshold);
    }
    case Family::weibull: {
      return std::exp(-std::pow(g.threshold / std::exp(eta[1]), std::exp(eta[0])));
    }
    default: break;
  }
  throw std::invalid_argument("g_eval: tail probability is not defined for this model");
}

Vec numeric_g_grad(const GSpec& g, const Model& model, const ParamVector& eta, std::size_t only = SIZE_MAX) {
  Vec out(eta.size());
  for (std::size_t k = 0; k < eta.size(); ++k) {
    if (only != SIZE_MAX && k != only) continue;
    const double h = g.step * std::max(1.0, std::abs(eta[k]));
    ParamVector ep = eta, em = eta;
    ep[k] += h;
    em[k] -= h;
    out[k] = (g_value(g, model, ep) - g_value(g, model, em)) / (2.0 * h);
  }
  return out;
}
}  // namespace

std::string to_string(HKind h) {
  switch (h) {
    case HKind::difference: return "difference";
    case HKind::ratio: return "ratio";
    case HKind::proportion_difference: return "proportion_difference";
  }
  return "unknown";
}

HKind hkind_from_string(const std::string& s) {
  if (s == "difference") return HKind::difference;
  if (s == "ratio") return HKind::ratio;
  if (s == "proportion_difference") return HKind::proportion_difference;
  throw InvalidDesign("h", "unknown comparison '" + s + "'");
}

std::string to_string(GSpec::Kind k) { return k == GSpec::Kind::tail_prob ? "tail_prob" : "identity"; }

void check_g(const GSpec& g, const Model& model) {
  if (g.kind == GSpec::Kind::identity) {
    if (model.dim() != 1) throw InvalidDesign("g.kind", "identity requires a one-parameter model");
    return;
  }
  if (model.family() == Family::bernoulli) throw InvalidDesign("g.kind", "tail_prob is not defined for bernoulli");
  if (!(g.step > 0.0 && g.step < 0.1)) throw InvalidDesign("g.step", "numeric step must lie in (0, 0.1)");
  if (!(g.threshold > 0.0) || !std::isfinite(g.threshold))
    throw InvalidDesign("g.threshold", "threshold must be positive and finite");
}

double g_eval(const GSpec& g, const Model& model, const ParamVector& eta) { return g_value(g, model, eta); }

Vec g_grad(const GSpec& g, const Model& model, const ParamVector& eta) {
  Vec out(eta.size());
  if (g.gradient == GSpec::Gradient::numeric) {
    out = numeric_g_grad(g, model, eta);
  } else if (g.kind == GSpec::Kind::identity) {
    const double th = model.to_natural(eta)[0];
    out[0] = th * (1.0 - th);
  } else if (model.family() == Family::gamma) {
    // d/d log(beta): -x^a e^-x / Gamma(a) with x = beta kappa; the shape derivative is numeric.
    const double al = std::exp(eta[0]);
    const double x = std::exp(eta[1]) * g.threshold;
    out[1] = -x * special::gamma_p_derivative(al, x);
    out[0] = numeric_g_grad(g, model, eta, 0)[0];
  } else if (model.family() == Family::weibull) {
    const double nu = std::exp(eta[0]);
    const double r = g.threshold / std::exp(eta[1]);
    const double rn = std::pow(r, nu);
    const double th = std::exp(-rn);
    out[0] = -th * rn * std::log(r) * nu;
    out[1] = th * rn * nu;
  } else {
    throw std::invalid_argument("g_grad: unsupported model for g");
  }
  bool degenerate = true;
  for (double c : out)
    if (std::abs(c) >= kDegenerateTol) degenerate = false;
  if (degenerate) throw DegenerateGradient("gradient of g vanishes at this parameter value");
  return out;
}

double h_natural(HKind h, double t1, double t2) {
  return h == HKind::ratio ? t1 / t2 : t1 - t2;
}

double h_eval(HKind h, double t1, double t2) {
  switch (h) {
    case HKind::difference: return t1 - t2;
    case HKind::ratio: return std::log(t1) - std::log(t2);
    case HKind::proportion_difference: {
      const double d = t1 - t2;
      return std::log1p(d) - std::log1p(-d);
    }
  }
  throw std::invalid_argument("h_eval: unknown comparison");
}

std::pair<double, double> h_grad(HKind h, double t1, double t2) {
  switch (h) {
    case HKind::difference: return {1.0, -1.0};
    case HKind::ratio: return {1.0 / t1, -1.0 / t2};
    case HKind::proportion_difference: {
      const double d = t1 - t2;
      const double s = 2.0 / (1.0 - d * d);
      return {s, -s};
    }
  }
  throw std::invalid_argument("h_grad: unknown comparison");
}

double working_transform(HKind h, double x) {
  if (std::isnan(x)) throw std::invalid_argument("working_transform: NaN");
  if (std::isinf(x)) return x;  // unbounded side of a one-sided interval
  switch (h) {
    case HKind::difference: return x;
    case HKind::ratio:
      if (x < 0.0) throw std::invalid_argument("ratio bounds must be non-negative");
      return x == 0.0 ? -kInf : std::log(x);
    case HKind::proportion_difference:
      if (x < -1.0 || x > 1.0) throw std::invalid_argument("proportion difference bounds must lie in [-1, 1]");
      if (x == 1.0) return kInf;
      if (x == -1.0) return -kInf;
      return std::log1p(x) - std::log1p(-x);
  }
  throw std::invalid_argument("working_transform: unknown comparison");
}

double inverse_working_transform(HKind h, double w) {
  switch (h) {
    case HKind::difference: return w;
    case HKind::ratio: return std::exp(w);
    case HKind::proportion_difference: return std::tanh(0.5 * w);
  }
  throw std::invalid_argument("inverse_working_transform: unknown comparison");
}

std::pair<double, double> map_interval(HKind h, double lower, double upper) {
  if (!(lower < upper)) throw InvalidDesign("interval", "lower bound must be below upper bound");
  return {working_transform(h, lower), working_transform(h, upper)};
}

}  // namespace fastpower
