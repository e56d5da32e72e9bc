#include "storesim/stats.hpp"

#include <limits>

namespace storesim::math {

double log_ndtr(double x) {
  if (x > 8.0) {
    // Phi(x) = 1 - Q with Q < 1e-15, so log Phi(x) = log1p(-Q) = -Q to
    // machine precision.
    return -0.5 * std::erfc(x / kSqrt2);
  }
  if (x > -37.0) {
    return std::log(0.5 * std::erfc(-x / kSqrt2));
  }
  // Deep lower tail: Phi(x) = phi(x)/(-x) * S(x) with the asymptotic series
  // S = 1 - 1/x^2 + 3/x^4 - 15/x^6 + ...; seven terms are ample for |x|>37.
  const double x2 = x * x;
  double term = 1.0, series = 1.0;
  for (int k = 1; k <= 7; ++k) {
    term *= -(2.0 * k - 1.0) / x2;
    series += term;
  }
  return -0.5 * x2 - 0.5 * kLog2Pi - std::log(-x) + std::log(series);
}

double ndtr_logpdf_ratio(double x) {
  return std::exp(norm_logpdf(x) - log_ndtr(x));
}

double inv_ndtr(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  // Acklam's piecewise rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF.
  const double e = ndtr(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double trunc_normal_logpdf(double q, double mu, double sigma) {
  if (q < 0.0) return -std::numeric_limits<double>::infinity();
  const double z = (q - mu) / sigma;
  return norm_logpdf(z) - std::log(sigma) - log_ndtr(mu / sigma);
}

double trunc_normal_mean(double mu, double sigma) {
  return mu + sigma * ndtr_logpdf_ratio(mu / sigma);
}

double trunc_normal_variance(double mu, double sigma) {
  const double alpha = -mu / sigma;       // truncation point in standard units
  const double lambda = ndtr_logpdf_ratio(-alpha);
  return sigma * sigma * (1.0 + alpha * lambda - lambda * lambda);
}

double sample_trunc_normal(double mu, double sigma, RngStream& rng) {
  const double ratio = mu / sigma;
  if (ratio > -5.0) {
    // Inverse CDF on the surviving upper-tail mass Phi(mu/sigma). Mapping
    // u -> -Phi^{-1}((1-u) * Phi(mu/sigma)) avoids the cancellation of
    // forming Phi(-mu/sigma) + u * (1 - Phi(-mu/sigma)) directly.
    const double mass = ndtr(ratio);
    const double z = -inv_ndtr(mass * (1.0 - rng.uniform()));
    return mu + sigma * z;
  }
  // Robert (1995) exponential rejection for a standard normal truncated to
  // [alpha, inf) with alpha = -mu/sigma > 5.
  const double alpha = -ratio;
  const double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double x = alpha + rng.exponential() / lambda;
    const double diff = x - lambda;
    if (std::log(rng.uniform()) <= -0.5 * diff * diff) return mu + sigma * x;
  }
}

}  // namespace storesim::math
