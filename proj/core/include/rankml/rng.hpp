#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace rankml {

// SplitMix64 generator. Every random choice in the project flows through this
// type so that results are reproducible bit-for-bit across platforms
// (std::shuffle / std::normal_distribution are implementation-defined).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) noexcept { return next() % n; }

  // Uniform double in [0, 1).
  double next_unit() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_unit();
  }

  // Box-Muller; one draw per call, the paired value is discarded.
  double next_gaussian(double stddev) noexcept {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return stddev * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates permutation of {0, ..., n-1}, a pure function of the seed.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace rankml
