#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "dgf/types.hpp"

namespace dgf {

// Counter-based generator: splitmix64 finalizer over (seed, stream, counter).
// Stateless apart from the counter, so identical seeds reproduce identical
// streams on every platform, and distinct streams are independent.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(mix(seed) ^ mix(stream ^ 0x5851f42d4c957f2dULL)) {}

  std::uint64_t next_u64() { return mix(base_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; caches the second deviate.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  Vec3 gaussian3() {
    Vec3 out;
    out << gaussian(), gaussian(), gaussian();
    return out;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t base_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dgf
