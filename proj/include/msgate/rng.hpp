#pragma once

// Self-contained xoshiro256++ generator with explicit samplers.  The standard
// library distributions are implementation-defined, which would break the
// byte-identical-output contract, so every draw is spelled out here.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace msgate {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Independent stream for a work item; mixing the indices through splitmix
  // keeps streams decorrelated regardless of scheduling order.
  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    std::uint64_t sm = seed;
    std::uint64_t h = splitmix64(sm);
    sm = h ^ (a * 0x9e3779b97f4a7c15ull + 0x7f4a7c15ull);
    h = splitmix64(sm);
    sm = h ^ (b * 0xbf58476d1ce4e5b9ull + 0x1ce4e5b9ull);
    h = splitmix64(sm);
    sm = h ^ (c * 0x94d049bb133111ebull + 0x33111ebull);
    return Rng(splitmix64(sm));
  }

  std::uint64_t next() {
    auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = (s_[3] << 45) | (s_[3] >> 19);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  // Inversion by sequential search; fine for the photon-count means used here.
  int poisson(double mean) {
    if (mean < 0.0) throw invalid_parameter("poisson: negative mean");
    if (mean == 0.0) return 0;
    double u = uniform();
    int k = 0;
    double p = std::exp(-mean);
    double cdf = p;
    while (u > cdf && k < 10000) {
      ++k;
      p *= mean / k;
      cdf += p;
    }
    return k;
  }

  // Index draw from unnormalized nonnegative weights.
  int categorical(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace msgate
