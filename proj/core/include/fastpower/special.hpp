#pragma once

// Thin wrappers over Boost.Math so the rest of the library does not depend on
// Boost headers or policies directly.
namespace fastpower::special {

double log_gamma(double x);
double digamma(double x);
double trigamma(double x);
/** Regularized upper incomplete gamma Q(a, x). */
double gamma_q(double a, double x);
/** d/dx P(a, x) = x^(a-1) e^-x / Gamma(a). */
double gamma_p_derivative(double a, double x);
double erfc_inv(double x);
double log_beta(double a, double b);

}  // namespace fastpower::special
