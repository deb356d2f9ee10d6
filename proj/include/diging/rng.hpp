#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace diging {

/// Deterministic random stream. All randomness in the library flows through
/// this wrapper so that runs are reproducible bit-for-bit from their seeds;
/// uniform/normal draws are derived from the raw 64-bit stream directly
/// instead of std distributions, whose sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent substream for (master seed, stream index) pairs.
  /// splitmix64 scrambling keeps nearby indices decorrelated.
  static Rng derive(std::uint64_t master, std::uint64_t stream) {
    return Rng(mix(mix(master) ^ mix(stream + 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is biased for huge n; n here is always tiny
    // (node counts), so the bias is far below anything observable.
    return next_u64() % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace diging
