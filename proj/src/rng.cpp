#include "storesim/rng.hpp"

#include <cmath>

#include "storesim/stats.hpp"

namespace storesim {

double RngStream::normal() { return math::inv_ndtr(uniform()); }

double RngStream::gamma(double shape) {
  // Marsaglia-Tsang squeeze method; boost to shape >= 1 via the power trick.
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

double RngStream::half_cauchy(double scale) {
  return scale * std::tan(M_PI_2 * uniform());
}

}  // namespace storesim
