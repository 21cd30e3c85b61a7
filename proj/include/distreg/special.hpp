#pragma once

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>

#include "distreg/common.hpp"

namespace distreg {

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kSqrt2 = 1.4142135623730950488;

inline double lgamma_fn(double x) { return boost::math::lgamma(x); }
inline double digamma_fn(double x) { return boost::math::digamma(x); }
inline double trigamma_fn(double x) { return boost::math::trigamma(x); }

/// Regularised lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) { return boost::math::gamma_p(a, x); }
/// Regularised upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) { return boost::math::gamma_q(a, x); }
inline double gamma_p_inv(double a, double p) { return boost::math::gamma_p_inv(a, p); }

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// 1 / (1 + e^{-x}).
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double norm_cdf(double x) { return 0.5 * boost::math::erfc(-x / kSqrt2); }
inline double norm_ccdf(double x) { return 0.5 * boost::math::erfc(x / kSqrt2); }

/// log Phi(x), usable deep in the lower tail.
inline double norm_logcdf(double x) {
  if (x > -30.0) return std::log(norm_cdf(x));
  // asymptotic expansion of Mills' ratio
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - 0.5 * kLogTwoPi - std::log(-x) + std::log(series);
}

inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw NumericError("norm_quantile: p outside (0,1)");
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double norm_logpdf(double x) { return -0.5 * (kLogTwoPi + x * x); }

}  // namespace distreg
