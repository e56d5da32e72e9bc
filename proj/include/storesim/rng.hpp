#pragma once

#include <cstdint>
#include <random>

namespace storesim {

// Pseudo-random stream with explicit seeding and cheap stream derivation.
// Every stochastic component takes one of these by reference; independent
// streams are derived from (seed, stream id) pairs so concurrent chains,
// episodes and policies never share generator state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(mix(seed)) {}

  // Independent stream keyed by (seed, stream). Two distinct keys give
  // statistically unrelated sequences.
  static RngStream derive(std::uint64_t seed, std::uint64_t stream) {
    return RngStream(mix(seed) ^ mix(stream * 0x9e3779b97f4a7c15ull + 0x243f6a8885a308d3ull));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0,1); never returns 0 or 1 so log()/probit() stay finite.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  double exponential() { return -std::log(uniform()); }

  double normal();                       // standard normal via inverse CDF
  double gamma(double shape);            // unit-scale gamma, shape > 0
  double beta(double a, double b);
  double half_cauchy(double scale);

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace storesim
