#pragma once

#include <cmath>

#include "storesim/rng.hpp"

// Scalar distribution functions used across the model, the samplers and the
// tests. All log-densities are natural logs of normalized densities unless
// noted otherwise.
namespace storesim::math {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112352;
inline constexpr double kSqrt2 = 1.4142135623730950488016887242096981;

// log of the standard normal density.
inline double norm_logpdf(double z) { return -0.5 * z * z - 0.5 * kLog2Pi; }

// Standard normal CDF.
inline double ndtr(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// log Phi(x), numerically stable over the whole real line. The erfc route
// holds until its argument underflows (x ~ -37); beyond that the Mills-ratio
// asymptotic series takes over.
double log_ndtr(double x);

// phi(x) / Phi(x): derivative of log_ndtr. Equals the hazard rate of the
// standard normal mirrored at -x.
double ndtr_logpdf_ratio(double x);

// Inverse standard normal CDF (probit). Acklam's rational approximation
// polished with one Halley step; relative error < 1e-14 on (0,1).
double inv_ndtr(double p);

// Normal with mean m and standard deviation s.
inline double normal_logpdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return norm_logpdf(z) - std::log(s);
}

// Half-Cauchy on [0, inf) with scale s.
inline double half_cauchy_logpdf(double x, double s) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  const double r = x / s;
  return std::log(2.0 / M_PI) - std::log(s) - std::log1p(r * r);
}

// Inverse-gamma with shape a and scale b.
inline double inv_gamma_logpdf(double x, double a, double b) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

// Normal truncated to [0, inf): log density at q for location mu / scale
// sigma. Returns -inf for q < 0 (outside the support).
double trunc_normal_logpdf(double q, double mu, double sigma);

// Mean and variance of the [0, inf) truncation of N(mu, sigma^2).
double trunc_normal_mean(double mu, double sigma);
double trunc_normal_variance(double mu, double sigma);

// Exact draw from the [0, inf) truncation. Inverse-CDF in the body of the
// distribution; exponential-rejection tail sampler once mu/sigma < -5.
double sample_trunc_normal(double mu, double sigma, RngStream& rng);

}  // namespace storesim::math
