#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fastpower/linalg.hpp"

namespace fastpower {

enum class Family { gamma, weibull, bernoulli };
enum class Transform { log, logit };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/** Parameter vector on the working (transformed, unconstrained) scale. */
using ParamVector = Vec;

/** Independent prior on one natural-scale parameter. */
struct ParamPrior {
  enum class Kind { gamma, beta };
  Kind kind = Kind::gamma;
  double a = 1.0;  // gamma shape / beta alpha
  double b = 1.0;  // gamma rate / beta beta
};

struct Prior {
  std::vector<ParamPrior> params;
};

struct SuffStats {
  Vec t;
  double n = 0.0;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual Family family() const = 0;
  virtual std::size_t dim() const = 0;
  virtual bool exp_family() const = 0;
  virtual Transform transform(std::size_t k) const = 0;
  virtual std::string param_name(std::size_t k) const = 0;
  /** True when the natural-scale value is inside the parameter space. */
  bool natural_valid(std::span<const double> natural) const;

  ParamVector to_working(std::span<const double> natural) const;
  Vec to_natural(const ParamVector& eta) const;

  /** Per-observation Fisher information on the working scale. */
  virtual Matrix fisher_info(const ParamVector& eta) const = 0;

  /** Log-likelihood of raw data (up to a constant). */
  virtual double loglik_data(const ParamVector& eta, std::span<const double> y) const = 0;
  virtual std::vector<double> simulate(const ParamVector& eta, std::size_t n, std::uint64_t seed) const = 0;
  /** Maximum likelihood estimate from raw data (working scale). */
  virtual ParamVector mle(std::span<const double> y) const = 0;

  // Exponential-family interface: l = sum_s C_s(eta) T_s - n A(eta) (+ const).
  virtual SuffStats suffstats(std::span<const double> y) const;
  virtual Vec grad_log_partition(const ParamVector& eta) const;   // dA/deta
  virtual Matrix natural_param_jacobian(const ParamVector& eta) const;  // M(k, s) = dC_s/deta_k
  /** Log-likelihood from sufficient statistics with optional gradient and Hessian. */
  virtual double loglik_stats(const ParamVector& eta, const SuffStats& s, Vec* grad, Matrix* hess) const;

  /**
   * Sufficient statistics whose likelihood is maximized at eta_hat, i.e. the
   * solution T of sum_s dC_s/deta_k T_s = n dA/deta_k for every k.
   */
  SuffStats recover_suffstats(const ParamVector& eta_hat, double n) const;
};

std::shared_ptr<const Model> make_model(Family family);

/** Log prior density on the working scale (Jacobian included), up to a constant unless normalized. */
double log_prior(const Model& model, const Prior& prior, const ParamVector& eta, Vec* grad = nullptr,
                 Matrix* hess = nullptr, bool normalized = false);

/** Draws MLEs eta0 + L z / sqrt(n_eff) with L L^T = I(eta0)^{-1} and z = Phi^{-1}(u). */
class MleSampler {
 public:
  MleSampler(std::shared_ptr<const Model> model, const ParamVector& eta0);
  const ParamVector& eta0() const noexcept { return eta0_; }
  const Matrix& chol_inverse_info() const noexcept { return l_; }
  /** omega = L Phi^{-1}(u); the MLE at effective size n_eff is eta0 + omega / sqrt(n_eff). */
  Vec deviation(std::span<const double> u) const;
  ParamVector at(const Vec& deviation, double n_eff) const;

 private:
  std::shared_ptr<const Model> model_;
  ParamVector eta0_;
  Matrix l_;
};

ParamVector sample_mle(std::shared_ptr<const Model> model, const ParamVector& eta0, double n, double q,
                       std::span<const double> u);

struct ModeResult {
  ParamVector mode;
  Matrix curvature;  // negative Hessian of the log posterior at the mode
};

/** Posterior mode and curvature from sufficient statistics (exponential families). */
ModeResult laplace_mode(const Model& model, const SuffStats& stats, const Prior& prior, const ParamVector& start);

/** Mode of -(n/2)(eta - eta_hat)' I(eta_hat) (eta - eta_hat) + log p(eta) and J = n I(mode) - Hess log p. */
ModeResult hybrid_mode(const Model& model, const ParamVector& eta_hat, double n, const Prior& prior);

}  // namespace fastpower
