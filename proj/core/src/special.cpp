#include "fastpower/special.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace fastpower::special {

namespace {
// Keep double precision throughout; promotion to long double costs ~3x.
using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
}  // namespace

double log_gamma(double x) { return boost::math::lgamma(x, Policy()); }
double digamma(double x) { return boost::math::digamma(x, Policy()); }
double trigamma(double x) { return boost::math::trigamma(x, Policy()); }
double gamma_q(double a, double x) { return boost::math::gamma_q(a, x, Policy()); }
double gamma_p_derivative(double a, double x) { return boost::math::gamma_p_derivative(a, x, Policy()); }
double erfc_inv(double x) { return boost::math::erfc_inv(x, Policy()); }
double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

}  // namespace fastpower::special
