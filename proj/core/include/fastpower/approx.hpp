#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>

#include "fastpower/design.hpp"

namespace fastpower {

/** Normal approximation to the posterior of the working-scale comparison. */
struct NormalPosterior {
  double mean = 0.0;
  double variance = 0.0;
  Method method = Method::bvm;
  double n = 0.0;
  std::size_t point_index = 0;
};

/** Pr(theta < delta) under the approximation; delta may be +-inf. */
double posterior_prob(const NormalPosterior& post, double delta);
/** Pr(lower < theta < upper); computed in the thinner tail to avoid cancellation. */
double interval_prob(const NormalPosterior& post, double lower, double upper);

/**
 * A validated design with everything that does not depend on n or the point
 * precomputed: working-scale design values, interval bounds, and the Cholesky
 * factors used to turn a uniform point into MLE deviations.
 */
class PreparedDesign {
 public:
  explicit PreparedDesign(DesignSpec spec, bool allow_unbounded = false);

  const DesignSpec& spec() const noexcept { return spec_; }
  const Model& model() const noexcept { return *model_; }
  std::shared_ptr<const Model> model_ptr() const noexcept { return model_; }
  std::size_t point_dimension() const noexcept { return 2 * model_->dim(); }
  const ParamVector& eta0(int group) const noexcept { return samplers_[group].eta0(); }
  double group_scale(int group) const noexcept { return group == 0 ? 1.0 : spec_.q; }

  /** Working-scale interval bounds (may be infinite). */
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  /** Working-scale comparison at the design values. */
  double theta0() const noexcept { return theta0_; }
  /** n times the large-sample variance of the comparison at the design values. */
  double unit_variance() const noexcept { return unit_variance_; }

  struct Draw {
    std::array<Vec, 2> omega;  // L_j Phi^{-1}(u_j) per group
  };
  Draw draw(std::span<const double> u) const;
  /** MLE of group j at total size n for a precomputed draw. */
  ParamVector mle(const Draw& draw, int group, double n) const;

  /** Approximate posterior at sample size n (group 1) for a precomputed draw. May throw on degenerate input. */
  NormalPosterior posterior(const Draw& draw, double n) const;
  NormalPosterior posterior(const Draw& draw, double n, Method method) const;

  /** Posterior mean and variance of theta_j = g(eta_j) for one group. */
  std::pair<double, double> group_posterior(const ParamVector& eta_hat, int group, double n, Method method) const;

 private:
  DesignSpec spec_;
  std::shared_ptr<const Model> model_;
  std::array<MleSampler, 2> samplers_;
  double lower_, upper_, theta0_, unit_variance_;
};

NormalPosterior approx_posterior(const PreparedDesign& design, double n, std::span<const double> u);

}  // namespace fastpower
