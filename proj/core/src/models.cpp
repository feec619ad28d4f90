#include "fastpower/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fastpower/errors.hpp"
#include "fastpower/numerics.hpp"
#include "fastpower/special.hpp"

namespace fastpower {

std::string to_string(Family f) {
  switch (f) {
    case Family::gamma: return "gamma";
    case Family::weibull: return "weibull";
    case Family::bernoulli: return "bernoulli";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "gamma") return Family::gamma;
  if (s == "weibull") return Family::weibull;
  if (s == "bernoulli") return Family::bernoulli;
  throw InvalidDesign("model", "unknown model family '" + s + "'");
}

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kEulerGamma = std::numbers::egamma;

class GammaModel final : public Model {
 public:
  Family family() const override { return Family::gamma; }
  std::size_t dim() const override { return 2; }
  bool exp_family() const override { return true; }
  Transform transform(std::size_t) const override { return Transform::log; }
  std::string param_name(std::size_t k) const override { return k == 0 ? "shape" : "rate"; }

  Matrix fisher_info(const ParamVector& eta) const override {
    const double al = std::exp(eta[0]);
    Matrix m(2);
    m(0, 0) = al * al * special::trigamma(al);
    m(0, 1) = m(1, 0) = -al;
    m(1, 1) = al;
    return m;
  }

  double loglik_data(const ParamVector& eta, std::span<const double> y) const override {
    return loglik_stats(eta, suffstats(y), nullptr, nullptr);
  }

  std::vector<double> simulate(const ParamVector& eta, std::size_t n, std::uint64_t seed) const override {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> dist(std::exp(eta[0]), 1.0 / std::exp(eta[1]));
    std::vector<double> y(n);
    for (auto& v : y) v = dist(rng);
    return y;
  }

  ParamVector mle(std::span<const double> y) const override {
    if (y.size() < 2) throw std::invalid_argument("gamma mle: need at least two observations");
    const double n = static_cast<double>(y.size());
    double sum = 0.0, sum_log = 0.0;
    for (double v : y) {
      if (!(v > 0.0)) throw std::invalid_argument("gamma mle: observations must be positive");
      sum += v;
      sum_log += std::log(v);
    }
    const double mean = sum / n;
    const double s = std::log(mean) - sum_log / n;
    if (!(s > 0.0)) throw std::invalid_argument("gamma mle: degenerate sample");
    // Solve log(a) - digamma(a) = s by Newton on log(a).
    double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    for (int it = 0; it < 100; ++it) {
      const double f = std::log(a) - special::digamma(a) - s;
      const double df = 1.0 - a * special::trigamma(a);  // d f / d log a
      const double step = f / df;
      a *= std::exp(-std::clamp(step, -2.0, 2.0));
      if (std::abs(step) < 1e-13) break;
    }
    return ParamVector{std::log(a), std::log(a / mean)};
  }

  SuffStats suffstats(std::span<const double> y) const override {
    double t1 = 0.0, t2 = 0.0;
    for (double v : y) {
      t1 += std::log(v);
      t2 += v;
    }
    return SuffStats{Vec{t1, t2}, static_cast<double>(y.size())};
  }

  Vec grad_log_partition(const ParamVector& eta) const override {
    const double al = std::exp(eta[0]);
    return Vec{al * (special::digamma(al) - eta[1]), -al};
  }

  Matrix natural_param_jacobian(const ParamVector& eta) const override {
    Matrix m(2);
    m(0, 0) = std::exp(eta[0]);
    m(1, 1) = -std::exp(eta[1]);
    return m;
  }

  double loglik_stats(const ParamVector& eta, const SuffStats& s, Vec* grad, Matrix* hess) const override {
    const double al = std::exp(eta[0]), be = std::exp(eta[1]);
    const double n = s.n, t1 = s.t[0], t2 = s.t[1];
    const double value = n * (al * eta[1] - special::log_gamma(al)) + (al - 1.0) * t1 - be * t2;
    if (grad || hess) {
      const double psi = special::digamma(al);
      const double g0 = al * (n * eta[1] + t1 - n * psi);
      if (grad) *grad = Vec{g0, n * al - be * t2};
      if (hess) {
        Matrix h(2);
        h(0, 0) = g0 - n * al * al * special::trigamma(al);
        h(0, 1) = h(1, 0) = n * al;
        h(1, 1) = -be * t2;
        *hess = h;
      }
    }
    return value;
  }
};

class WeibullModel final : public Model {
 public:
  Family family() const override { return Family::weibull; }
  std::size_t dim() const override { return 2; }
  bool exp_family() const override { return false; }
  Transform transform(std::size_t) const override { return Transform::log; }
  std::string param_name(std::size_t k) const override { return k == 0 ? "shape" : "scale"; }

  Matrix fisher_info(const ParamVector& eta) const override {
    const double nu = std::exp(eta[0]);
    const double c = 1.0 - kEulerGamma;
    Matrix m(2);
    m(0, 0) = c * c + std::numbers::pi * std::numbers::pi / 6.0;
    m(0, 1) = m(1, 0) = -nu * c;
    m(1, 1) = nu * nu;
    return m;
  }

  double loglik_data(const ParamVector& eta, std::span<const double> y) const override {
    const double nu = std::exp(eta[0]), log_lambda = eta[1];
    double value = 0.0;
    for (double v : y) {
      const double lz = std::log(v) - log_lambda;
      value += eta[0] - log_lambda + (nu - 1.0) * lz - std::exp(nu * lz);
    }
    return value;
  }

  std::vector<double> simulate(const ParamVector& eta, std::size_t n, std::uint64_t seed) const override {
    std::mt19937_64 rng(seed);
    std::weibull_distribution<double> dist(std::exp(eta[0]), std::exp(eta[1]));
    std::vector<double> y(n);
    for (auto& v : y) v = dist(rng);
    return y;
  }

  ParamVector mle(std::span<const double> y) const override {
    if (y.size() < 2) throw std::invalid_argument("weibull mle: need at least two observations");
    const double n = static_cast<double>(y.size());
    std::vector<double> ly(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!(y[i] > 0.0)) throw std::invalid_argument("weibull mle: observations must be positive");
      ly[i] = std::log(y[i]);
    }
    const double lmax = *std::max_element(ly.begin(), ly.end());
    const double mean_ly = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    // Profile score in nu, written with y scaled by max(y) to avoid overflow.
    auto score = [&](double log_nu) {
      const double nu = std::exp(log_nu);
      double s0 = 0.0, s1 = 0.0;
      for (double l : ly) {
        const double w = std::exp(nu * (l - lmax));
        s0 += w;
        s1 += w * l;
      }
      return 1.0 / nu + mean_ly - s1 / s0;
    };
    // score decreases in nu; search for the sign change of -score.
    auto neg = [&](double x) { return -score(std::log(x)); };
    const auto br = expand_bracket(neg, 1.0, 1e-6, 1e6);
    if (br.verdict != BracketVerdict::found) throw std::runtime_error("weibull mle: no root for the shape");
    const double nu = brent_root(neg, br.bracket, 1e-12, 0.0).root;
    double s0 = 0.0;
    for (double l : ly) s0 += std::exp(nu * (l - lmax));
    const double log_lambda = lmax + std::log(s0 / n) / nu;
    return ParamVector{std::log(nu), log_lambda};
  }
};

class BernoulliModel final : public Model {
 public:
  Family family() const override { return Family::bernoulli; }
  std::size_t dim() const override { return 1; }
  bool exp_family() const override { return true; }
  Transform transform(std::size_t) const override { return Transform::logit; }
  std::string param_name(std::size_t) const override { return "prob"; }

  Matrix fisher_info(const ParamVector& eta) const override {
    const double th = expit(eta[0]);
    Matrix m(1);
    m(0, 0) = th * (1.0 - th);
    return m;
  }

  double loglik_data(const ParamVector& eta, std::span<const double> y) const override {
    return loglik_stats(eta, suffstats(y), nullptr, nullptr);
  }

  std::vector<double> simulate(const ParamVector& eta, std::size_t n, std::uint64_t seed) const override {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution dist(expit(eta[0]));
    std::vector<double> y(n);
    for (auto& v : y) v = dist(rng) ? 1.0 : 0.0;
    return y;
  }

  ParamVector mle(std::span<const double> y) const override {
    if (y.empty()) throw std::invalid_argument("bernoulli mle: empty sample");
    const double s = std::accumulate(y.begin(), y.end(), 0.0);
    const double n = static_cast<double>(y.size());
    if (s <= 0.0 || s >= n) throw std::invalid_argument("bernoulli mle: MLE is on the boundary");
    return ParamVector{std::log(s / (n - s))};
  }

  SuffStats suffstats(std::span<const double> y) const override {
    return SuffStats{Vec{std::accumulate(y.begin(), y.end(), 0.0)}, static_cast<double>(y.size())};
  }

  Vec grad_log_partition(const ParamVector& eta) const override { return Vec{expit(eta[0])}; }

  Matrix natural_param_jacobian(const ParamVector&) const override { return Matrix::identity(1); }

  double loglik_stats(const ParamVector& eta, const SuffStats& s, Vec* grad, Matrix* hess) const override {
    const double th = expit(eta[0]);
    if (grad) *grad = Vec{s.t[0] - s.n * th};
    if (hess) {
      Matrix h(1);
      h(0, 0) = -s.n * th * (1.0 - th);
      *hess = h;
    }
    return s.t[0] * eta[0] - s.n * softplus(eta[0]);
  }
};

}  // namespace

bool Model::natural_valid(std::span<const double> natural) const {
  if (natural.size() != dim()) return false;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double x = natural[k];
    if (!std::isfinite(x)) return false;
    if (transform(k) == Transform::log && !(x > 0.0)) return false;
    if (transform(k) == Transform::logit && !(x > 0.0 && x < 1.0)) return false;
  }
  return true;
}

ParamVector Model::to_working(std::span<const double> natural) const {
  if (!natural_valid(natural)) throw std::invalid_argument("to_working: value outside the parameter space");
  ParamVector eta(dim());
  for (std::size_t k = 0; k < dim(); ++k)
    eta[k] = transform(k) == Transform::log ? std::log(natural[k]) : std::log(natural[k] / (1.0 - natural[k]));
  return eta;
}

Vec Model::to_natural(const ParamVector& eta) const {
  Vec x(dim());
  for (std::size_t k = 0; k < dim(); ++k) x[k] = transform(k) == Transform::log ? std::exp(eta[k]) : expit(eta[k]);
  return x;
}

SuffStats Model::suffstats(std::span<const double>) const {
  throw Unsupported(to_string(family()) + " is not an exponential family");
}
Vec Model::grad_log_partition(const ParamVector&) const {
  throw Unsupported(to_string(family()) + " is not an exponential family");
}
Matrix Model::natural_param_jacobian(const ParamVector&) const {
  throw Unsupported(to_string(family()) + " is not an exponential family");
}
double Model::loglik_stats(const ParamVector&, const SuffStats&, Vec*, Matrix*) const {
  throw Unsupported(to_string(family()) + " is not an exponential family");
}

SuffStats Model::recover_suffstats(const ParamVector& eta_hat, double n) const {
  if (!exp_family()) throw Unsupported(to_string(family()) + " has no sufficient statistics");
  Vec rhs = grad_log_partition(eta_hat);
  rhs *= n;
  return SuffStats{solve_general(natural_param_jacobian(eta_hat), rhs), n};
}

std::shared_ptr<const Model> make_model(Family family) {
  switch (family) {
    case Family::gamma: return std::make_shared<GammaModel>();
    case Family::weibull: return std::make_shared<WeibullModel>();
    case Family::bernoulli: return std::make_shared<BernoulliModel>();
  }
  throw std::invalid_argument("make_model: unknown family");
}

double log_prior(const Model& model, const Prior& prior, const ParamVector& eta, Vec* grad, Matrix* hess,
                 bool normalized) {
  const std::size_t d = model.dim();
  if (prior.params.size() != d) throw std::invalid_argument("log_prior: prior count does not match the model");
  double value = 0.0;
  Vec g(d);
  Matrix h(d);
  for (std::size_t k = 0; k < d; ++k) {
    const ParamPrior& p = prior.params[k];
    const double e = eta[k];
    if (model.transform(k) == Transform::log) {
      if (p.kind != ParamPrior::Kind::gamma) throw std::invalid_argument("log_prior: log-scale parameters take gamma priors");
      const double x = std::exp(e);
      value += p.a * e - p.b * x;
      if (normalized) value += p.a * std::log(p.b) - special::log_gamma(p.a);
      g[k] = p.a - p.b * x;
      h(k, k) = -p.b * x;
    } else {
      if (p.kind != ParamPrior::Kind::beta) throw std::invalid_argument("log_prior: probabilities take beta priors");
      const double th = expit(e);
      // log theta = -softplus(-e), log(1 - theta) = -softplus(e)
      value += -p.a * softplus(-e) - p.b * softplus(e);
      if (normalized) value -= special::log_beta(p.a, p.b);
      g[k] = p.a - (p.a + p.b) * th;
      h(k, k) = -(p.a + p.b) * th * (1.0 - th);
    }
  }
  if (grad) *grad = g;
  if (hess) *hess = h;
  return value;
}

MleSampler::MleSampler(std::shared_ptr<const Model> model, const ParamVector& eta0)
    : model_(std::move(model)), eta0_(eta0), l_(cholesky_lower(inverse_spd(model_->fisher_info(eta0)))) {}

Vec MleSampler::deviation(std::span<const double> u) const {
  if (u.size() != eta0_.size()) throw std::invalid_argument("MleSampler: point dimension mismatch");
  Vec z(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) z[k] = std_normal_quantile(u[k]);
  return l_ * z;
}

ParamVector MleSampler::at(const Vec& deviation, double n_eff) const {
  return eta0_ + (1.0 / std::sqrt(n_eff)) * deviation;
}

ParamVector sample_mle(std::shared_ptr<const Model> model, const ParamVector& eta0, double n, double q,
                       std::span<const double> u) {
  if (!(n > 0.0) || !(q > 0.0)) throw std::invalid_argument("sample_mle: n and q must be positive");
  MleSampler s(std::move(model), eta0);
  return s.at(s.deviation(u), n * q);
}

ModeResult laplace_mode(const Model& model, const SuffStats& stats, const Prior& prior, const ParamVector& start) {
  Objective obj;
  obj.value = [&](const Vec& e) { return model.loglik_stats(e, stats, nullptr, nullptr) + log_prior(model, prior, e); };
  obj.gradient = [&](const Vec& e) {
    Vec gl, gp;
    model.loglik_stats(e, stats, &gl, nullptr);
    log_prior(model, prior, e, &gp, nullptr);
    return gl + gp;
  };
  obj.hessian = [&](const Vec& e) {
    Matrix hl, hp;
    model.loglik_stats(e, stats, nullptr, &hl);
    log_prior(model, prior, e, nullptr, &hp);
    hl += hp;
    return hl;
  };
  const auto res = local_maximize(obj, start, 1e-9 * std::max(1.0, stats.n));
  Matrix j = obj.hessian(res.x);
  j *= -1.0;
  cholesky_lower(j);  // throws if the curvature is not positive definite
  return ModeResult{res.x, j};
}

ModeResult hybrid_mode(const Model& model, const ParamVector& eta_hat, double n, const Prior& prior) {
  Matrix info = model.fisher_info(eta_hat);
  info *= n;
  Objective obj;
  obj.value = [&](const Vec& e) {
    const Vec diff = e - eta_hat;
    return -0.5 * diff.dot(info * diff) + log_prior(model, prior, e);
  };
  obj.gradient = [&](const Vec& e) {
    Vec gp;
    log_prior(model, prior, e, &gp, nullptr);
    return gp - info * (e - eta_hat);
  };
  obj.hessian = [&](const Vec& e) {
    Matrix hp;
    log_prior(model, prior, e, nullptr, &hp);
    return hp - info;
  };
  const auto res = local_maximize(obj, eta_hat, 1e-9 * std::max(1.0, n));
  Matrix hp;
  log_prior(model, prior, res.x, nullptr, &hp);
  Matrix j = model.fisher_info(res.x);
  j *= n;
  j -= hp;
  cholesky_lower(j);
  return ModeResult{res.x, j};
}

}  // namespace fastpower
