#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace opfvf {

// All sampling in the library goes through this generator instead of
// <random> distributions, whose output is implementation-defined. Outputs
// are reproducible for a given seed on any platform.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stable combmaker for per-instance seeds: hash(base_seed, index) so that
// instance i can be regenerated without drawing i-1 predecessors.
inline std::uint64_t seed_for_index(std::uint64_t base_seed, std::uint64_t index) {
  std::uint64_t s = base_seed ^ (0x9E3779B97F4A7C15ULL + index * 0xD1B54A32D192ED03ULL);
  splitmix64(s);
  return splitmix64(s);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) w = splitmix64(sm);
    have_cached_normal_ = false;
    cached_normal_ = 0.0;
  }

  // xoshiro256++
  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  std::uint64_t next_below(std::uint64_t n) {
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = n * ((~0ULL) / n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // standard normal via Box-Muller; second value cached
  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    double u1 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double lognormal(double mu_log, double sigma_log) {
    return std::exp(mu_log + sigma_log * normal());
  }

  // Dirichlet(1,...,1): uniform over the simplex, via normalized exponentials.
  std::vector<double> dirichlet_uniform(std::size_t n) {
    std::vector<double> lambda(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double u = next_double();
      if (u <= 0.0) u = 0x1.0p-53;
      lambda[i] = -std::log(u);
      total += lambda[i];
    }
    for (auto& v : lambda) v /= total;
    return lambda;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  bool have_cached_normal_;
  double cached_normal_;
};

// Log-normal parameters with arithmetic mean 1 and the requested standard
// deviation: sigma^2 = ln(1 + std^2), mu = -sigma^2 / 2.
struct LogNormalUnitMean {
  double mu_log;
  double sigma_log;

  explicit LogNormalUnitMean(double stddev) {
    const double s2 = std::log(1.0 + stddev * stddev);
    sigma_log = std::sqrt(s2);
    mu_log = -0.5 * s2;
  }
};

} // namespace opfvf
