#pragma once

#include <cstdint>
#include <random>

namespace defl {

/// splitmix64 mixing step.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b,
                                  std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t s = mix64(a);
  s = mix64(s ^ b);
  s = mix64(s ^ c);
  return mix64(s ^ d);
}

/// Deterministic random stream. Uniform doubles are produced from raw
/// mt19937_64 output (never via distribution classes, whose results are
/// implementation-defined), so streams are stable for a given platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0,
            std::uint64_t tag = 0)
      : engine_(combine_seed(seed, stream, substream, tag)) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // modulo bias is negligible for n << 2^64
    return engine_() % n;
  }

  /// Standard normal via Box-Muller.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace defl
