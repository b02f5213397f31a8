#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mmgp {

/// Portable seeded generator used wherever reproducibility across languages
/// matters (random Fourier features, dataset generation).
///
/// State update (splitmix64):
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// uniform() = ((next() >> 11) + 1) * 2^-53, a double in (0, 1].
/// normal() is Box-Muller on two consecutive uniforms u1, u2:
///   r = sqrt(-2 ln u1); first call returns r cos(2 pi u2), the next call
///   returns the cached r sin(2 pi u2).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(phase);
    has_cached_ = true;
    return r * std::cos(phase);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Derives an independent stream seed from a base seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  SplitMix64 mix(base ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  return mix.next();
}

}  // namespace mmgp
