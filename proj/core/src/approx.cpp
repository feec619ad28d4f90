#include "fastpower/approx.hpp"

#include <cmath>
#include <stdexcept>

#include "fastpower/errors.hpp"
#include "fastpower/numerics.hpp"

namespace fastpower {

double posterior_prob(const NormalPosterior& post, double delta) {
  if (delta == -INFINITY) return 0.0;
  if (delta == INFINITY) return 1.0;
  return std_normal_cdf((delta - post.mean) / std::sqrt(post.variance));
}

double interval_prob(const NormalPosterior& post, double lower, double upper) {
  if (!(lower <= upper)) throw std::invalid_argument("interval_prob: lower bound exceeds upper bound");
  const double sd = std::sqrt(post.variance);
  const double zl = (lower - post.mean) / sd;
  const double zu = (upper - post.mean) / sd;
  if (zl > 0.0) return std_normal_sf(zl) - std_normal_sf(zu);
  return std_normal_cdf(zu) - std_normal_cdf(zl);
}

namespace {

MleSampler make_sampler(const DesignSpec& spec, const std::shared_ptr<const Model>& model, int group) {
  return MleSampler(model, model->to_working(spec.design[group]));
}

const DesignSpec& validated(const DesignSpec& spec, bool allow_unbounded) {
  validate(spec, allow_unbounded);
  return spec;
}

}  // namespace

PreparedDesign::PreparedDesign(DesignSpec spec, bool allow_unbounded)
    : spec_(validated(spec, allow_unbounded)),
      model_(make_model(spec_.model)),
      samplers_{make_sampler(spec_, model_, 0), make_sampler(spec_, model_, 1)} {
  std::tie(lower_, upper_) = map_interval(spec_.h, spec_.lower, spec_.upper);
  double th[2], var[2];
  for (int j = 0; j < 2; ++j) {
    const ParamVector& e = samplers_[j].eta0();
    th[j] = g_eval(spec_.g, *model_, e);
    Vec gg;
    try {
      gg = g_grad(spec_.g, *model_, e);
    } catch (const DegenerateGradient&) {
      throw InvalidDesign("g", "g has a vanishing gradient at the design values of group " + std::to_string(j + 1));
    }
    var[j] = inv_quad_form(model_->fisher_info(e), gg) / group_scale(j);
  }
  theta0_ = h_eval(spec_.h, th[0], th[1]);
  if (!std::isfinite(theta0_)) throw InvalidDesign("design", "comparison is not finite at the design values");
  const auto [d1, d2] = h_grad(spec_.h, th[0], th[1]);
  unit_variance_ = d1 * d1 * var[0] + d2 * d2 * var[1];
  if (!(unit_variance_ > 0.0)) throw InvalidDesign("h", "comparison has zero variance at the design values");
}

PreparedDesign::Draw PreparedDesign::draw(std::span<const double> u) const {
  const std::size_t d = model_->dim();
  if (u.size() != 2 * d) throw std::invalid_argument("PreparedDesign::draw: point dimension mismatch");
  return Draw{{samplers_[0].deviation(u.subspan(0, d)), samplers_[1].deviation(u.subspan(d, d))}};
}

ParamVector PreparedDesign::mle(const Draw& draw, int group, double n) const {
  return samplers_[group].at(draw.omega[group], n * group_scale(group));
}

std::pair<double, double> PreparedDesign::group_posterior(const ParamVector& eta_hat, int group, double n,
                                                          Method method) const {
  const double nj = n * group_scale(group);
  const Prior& prior = spec_.priors[group];
  ParamVector at;
  Matrix curvature;
  switch (method) {
    case Method::bvm:
      at = eta_hat;
      curvature = model_->fisher_info(eta_hat);
      curvature *= nj;
      break;
    case Method::laplace: {
      const SuffStats stats = model_->recover_suffstats(eta_hat, nj);
      const ModeResult r = laplace_mode(*model_, stats, prior, eta_hat);
      at = r.mode;
      curvature = r.curvature;
      break;
    }
    case Method::hybrid: {
      const ModeResult r = hybrid_mode(*model_, eta_hat, nj, prior);
      at = r.mode;
      curvature = r.curvature;
      break;
    }
  }
  const double theta = g_eval(spec_.g, *model_, at);
  const Vec gg = g_grad(spec_.g, *model_, at);
  return {theta, inv_quad_form(curvature, gg)};
}

NormalPosterior PreparedDesign::posterior(const Draw& draw, double n) const {
  return posterior(draw, n, spec_.method);
}

NormalPosterior PreparedDesign::posterior(const Draw& draw, double n, Method method) const {
  const auto [t1, v1] = group_posterior(mle(draw, 0, n), 0, n, method);
  const auto [t2, v2] = group_posterior(mle(draw, 1, n), 1, n, method);
  const auto [d1, d2] = h_grad(spec_.h, t1, t2);
  NormalPosterior post;
  post.mean = h_eval(spec_.h, t1, t2);
  post.variance = d1 * d1 * v1 + d2 * d2 * v2;
  post.method = method;
  post.n = n;
  return post;
}

NormalPosterior approx_posterior(const PreparedDesign& design, double n, std::span<const double> u) {
  if (!(n > 0.0)) throw std::invalid_argument("approx_posterior: n must be positive");
  return design.posterior(design.draw(u), n);
}

}  // namespace fastpower
