#pragma once

#include <string>
#include <utility>

#include "fastpower/models.hpp"

namespace fastpower {

/** Maps a group's working-scale parameters to the scalar characteristic theta_j. */
struct GSpec {
  enum class Kind { tail_prob, identity };
  enum class Gradient { analytic, numeric };
  Kind kind = Kind::identity;
  double threshold = 0.0;  // kappa for tail_prob
  Gradient gradient = Gradient::analytic;
  double step = 1e-5;  // relative central-difference step for numeric derivatives
};

enum class HKind { difference, ratio, proportion_difference };

std::string to_string(HKind h);
HKind hkind_from_string(const std::string& s);
std::string to_string(GSpec::Kind k);

/** Throws InvalidDesign when g does not make sense for the model. */
void check_g(const GSpec& g, const Model& model);

double g_eval(const GSpec& g, const Model& model, const ParamVector& eta);
/** Gradient of g on the working scale; throws DegenerateGradient when all components vanish. */
Vec g_grad(const GSpec& g, const Model& model, const ParamVector& eta);

/**
 * The comparison is handled on a working scale where normality is more
 * plausible: difference -> theta1 - theta2, ratio -> log theta1 - log theta2,
 * proportion_difference -> t(theta1 - theta2) with t(x) = log((1 + x) / (1 - x)).
 */
double h_natural(HKind h, double theta1, double theta2);
double h_eval(HKind h, double theta1, double theta2);
/** Partial derivatives of the working-scale h with respect to (theta1, theta2). */
std::pair<double, double> h_grad(HKind h, double theta1, double theta2);

/** Working-scale image of a natural-scale comparison value (monotone; +-inf allowed). */
double working_transform(HKind h, double natural);
double inverse_working_transform(HKind h, double working);
std::pair<double, double> map_interval(HKind h, double lower, double upper);

}  // namespace fastpower
