#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fastpower/comparisons.hpp"
#include "fastpower/models.hpp"

namespace fastpower {

enum class Method { bvm, laplace, hybrid };
enum class AnalysisType { posterior_prob, bayes_factor, credible_interval };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
std::string to_string(AnalysisType a);

struct Analysis {
  AnalysisType type = AnalysisType::posterior_prob;
  double gamma = 0.8;            // posterior_prob: conviction threshold
  double bf_k = 1.0;             // bayes_factor: evidence threshold K
  std::optional<double> pi0;     // bayes_factor: prior probability of the interval (estimated if absent)
  double alpha = 0.05;           // credible_interval: 1 - alpha coverage
};

/** A two-group design, with design values and hyperparameters on the natural scale. */
struct DesignSpec {
  Family model = Family::bernoulli;
  std::array<std::vector<double>, 2> design;
  std::array<Prior, 2> priors;
  GSpec g;
  HKind h = HKind::difference;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  Analysis analysis;
  double target_power = 0.8;
  std::size_t m = 1024;
  Method method = Method::laplace;
  double q = 1.0;  // n2 = q * n1
  std::uint64_t seed = 0;
  double n_max = 1e6;
  std::string label;
};

/**
 * Throws InvalidDesign naming the offending field. Does not check attainability.
 * allow_unbounded admits (-inf, inf), which only the simulation oracle accepts.
 */
void validate(const DesignSpec& spec, bool allow_unbounded = false);

}  // namespace fastpower
