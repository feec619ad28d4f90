#include "fastpower/design.hpp"

#include <cmath>

#include "fastpower/errors.hpp"

namespace fastpower {

std::string to_string(Method m) {
  switch (m) {
    case Method::bvm: return "bvm";
    case Method::laplace: return "laplace";
    case Method::hybrid: return "hybrid";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "bvm") return Method::bvm;
  if (s == "laplace") return Method::laplace;
  if (s == "hybrid") return Method::hybrid;
  throw InvalidDesign("method", "unknown method '" + s + "'");
}

std::string to_string(AnalysisType a) {
  switch (a) {
    case AnalysisType::posterior_prob: return "posterior_prob";
    case AnalysisType::bayes_factor: return "bayes_factor";
    case AnalysisType::credible_interval: return "credible_interval";
  }
  return "unknown";
}

namespace {
bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }
}  // namespace

void validate(const DesignSpec& s, bool allow_unbounded) {
  const auto model = make_model(s.model);
  const std::size_t d = model->dim();
  for (int j = 0; j < 2; ++j) {
    const std::string grp = "group" + std::to_string(j + 1);
    if (s.design[j].size() != d)
      throw InvalidDesign("design." + grp, "expected " + std::to_string(d) + " parameter value(s)");
    for (std::size_t k = 0; k < d; ++k) {
      const double x = s.design[j][k];
      const bool ok = model->transform(k) == Transform::log ? (x > 0.0 && std::isfinite(x)) : in_open_unit(x);
      if (!ok) throw InvalidDesign("design." + grp + "." + model->param_name(k), "value outside the parameter space");
    }
    if (s.priors[j].params.size() != d)
      throw InvalidDesign("priors." + grp, "expected " + std::to_string(d) + " prior(s)");
    for (std::size_t k = 0; k < d; ++k) {
      const auto& p = s.priors[j].params[k];
      const std::string path = "priors." + grp + "[" + std::to_string(k) + "]";
      const auto want = model->transform(k) == Transform::log ? ParamPrior::Kind::gamma : ParamPrior::Kind::beta;
      if (p.kind != want)
        throw InvalidDesign(path + ".family", want == ParamPrior::Kind::gamma ? "expected a gamma prior" : "expected a beta prior");
      if (!(p.a > 0.0) || !std::isfinite(p.a)) throw InvalidDesign(path, "first hyperparameter must be positive");
      if (!(p.b > 0.0) || !std::isfinite(p.b)) throw InvalidDesign(path, "second hyperparameter must be positive");
    }
  }
  check_g(s.g, *model);
  if (s.h == HKind::proportion_difference && s.g.kind != GSpec::Kind::identity)
    throw InvalidDesign("h", "proportion_difference requires probabilities from g = identity");

  if (std::isnan(s.lower) || std::isnan(s.upper)) throw InvalidDesign("interval", "bounds must be numbers");
  if (!(s.lower < s.upper)) throw InvalidDesign("interval", "lower bound must be below upper bound");
  if (!allow_unbounded && std::isinf(s.lower) && std::isinf(s.upper)) throw InvalidDesign("interval", "at least one bound must be finite");
  try {
    map_interval(s.h, s.lower, s.upper);
  } catch (const InvalidDesign&) {
    throw;
  } catch (const std::exception& e) {
    throw InvalidDesign("interval", e.what());
  }

  switch (s.analysis.type) {
    case AnalysisType::posterior_prob:
      if (!(s.analysis.gamma >= 0.5 && s.analysis.gamma < 1.0))
        throw InvalidDesign("analysis.gamma", "must lie in [0.5, 1)");
      break;
    case AnalysisType::bayes_factor:
      if (!(s.analysis.bf_k >= 1.0) || !std::isfinite(s.analysis.bf_k))
        throw InvalidDesign("analysis.K", "must be at least 1");
      if (s.analysis.pi0 && !in_open_unit(*s.analysis.pi0)) throw InvalidDesign("analysis.pi0", "must lie in (0, 1)");
      break;
    case AnalysisType::credible_interval:
      if (!in_open_unit(s.analysis.alpha)) throw InvalidDesign("analysis.alpha", "must lie in (0, 1)");
      break;
  }
  if (!in_open_unit(s.target_power)) throw InvalidDesign("target_power", "must lie in (0, 1)");
  if (s.m < 1) throw InvalidDesign("m", "must be at least 1");
  if (!(s.q > 0.0) || !std::isfinite(s.q)) throw InvalidDesign("q", "must be positive");
  if (!(s.n_max > 2.0) || !std::isfinite(s.n_max)) throw InvalidDesign("n_max", "must exceed 2");
  if (s.method == Method::laplace && !model->exp_family())
    throw InvalidDesign("method", "laplace needs sufficient statistics; use hybrid or bvm for " + to_string(s.model));
}

}  // namespace fastpower
