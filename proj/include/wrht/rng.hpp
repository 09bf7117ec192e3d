#pragma once

#include <cmath>
#include <cstdint>

namespace wrht {

/// splitmix64 finalizer; a well mixed 64-bit permutation used as the core of
/// the counter-based generator below.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// @brief Counter-based pseudo-random generator.
///
/// Every draw is a pure function of (seed, stream, index), so replicates can
/// be generated in any order (or re-generated piecemeal) and still agree
/// bit-for-bit with a sequential pass.  This is what makes bootstrap
/// calibration and Monte Carlo harness output reproducible across runs.
///
/// The standard-library distributions are deliberately avoided: their output
/// is implementation-defined, which would break byte-identical CLI reruns
/// between toolchains.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : base_(splitmix64(splitmix64(seed) ^ (stream + 0xD1B54A32D192ED03ULL))) {}

  /// Raw 64-bit word at position `index` of this stream.
  std::uint64_t u64_at(std::uint64_t index) const {
    return splitmix64(base_ + (index + 1) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform_at(std::uint64_t index) const {
    return static_cast<double>(u64_at(index) >> 11) * 0x1.0p-53;
  }

  /// Standard normal deviate; draw `index` consumes uniforms 2*index and
  /// 2*index+1 (Box-Muller, cosine branch).
  double gaussian_at(std::uint64_t index) const {
    double u1 = uniform_at(2 * index);
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;  // avoid log(0)
    const double u2 = uniform_at(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniform integer in [0, n).  Modulo bias is < n / 2^64, irrelevant at the
  /// sample sizes used here.
  std::uint64_t pick_at(std::uint64_t index, std::uint64_t n) const {
    return u64_at(index) % n;
  }

 private:
  std::uint64_t base_;
};

}  // namespace wrht
