#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "scmmsb/errors.hpp"

namespace scmmsb {

// splitmix64 finalizer (Vigna / Stafford mix13)
inline std::uint64_t mix_bits(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive a child key from a parent key and a tag. Used to give every work
// item (iteration, phase, time step, dyad, ...) its own independent stream,
// so draws do not depend on sweep order or worker count.
inline std::uint64_t derive_key(std::uint64_t parent, std::uint64_t tag) {
  return mix_bits(parent ^ (mix_bits(tag) + 0x9e3779b97f4a7c15ULL));
}

// Small counter-based generator. All randomness in the project goes through
// this class; draws are reproducible given the key alone.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(mix_bits(key)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Stateless between calls so results do
  // not depend on how many draws preceded this one within a stream pair.
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection-free mapping is overkill here; modulo bias is
    // negligible for n << 2^64 but we reject to keep draws exact.
    std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Categorical draw proportional to non-negative weights. O(K).
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) {
      throw NumericalError("categorical draw: all weights are zero");
    }
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      acc += weights[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  std::uint64_t state_;
};

// Phase tags for keyed streams. Inference and generation phases share the
// tag space so a single seed never reuses a stream across contexts.
namespace rng_phase {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kMinibatch = 2;
inline constexpr std::uint64_t kIndicators = 3;
inline constexpr std::uint64_t kMuNoise = 4;
inline constexpr std::uint64_t kPhiNoise = 5;
inline constexpr std::uint64_t kGenLinks = 16;
inline constexpr std::uint64_t kGenMu = 17;
inline constexpr std::uint64_t kGenPhi = 18;
}  // namespace rng_phase

}  // namespace scmmsb
