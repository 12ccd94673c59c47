#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace sloppy {

// Counter-based stream built on the SplitMix64 output function.  Streams
// are keyed by a list of 64-bit words (seed, stage, particle index, ...)
// so that any parallel schedule draws the same numbers for the same
// logical slot.  The generator is fully specified here: no standard
// library distributions are involved, so output is identical across
// platforms given the same key.
class Rng {
 public:
  explicit Rng(uint64_t key) : key_(key) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Fold key words into a single stream key.
  static Rng keyed(std::initializer_list<uint64_t> words) {
    uint64_t k = 0x8000000080001000ull;
    for (uint64_t w : words) k = mix(k ^ mix(w));
    return Rng(k);
  }

  uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ull * (++counter_)); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cache_ = r * std::sin(a);
    has_cache_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

// Stream tags; keep stable, they are part of the reproducibility contract.
namespace rng_tag {
constexpr uint64_t init_draw = 0x11;
constexpr uint64_t resample = 0x22;
constexpr uint64_t move = 0x33;
constexpr uint64_t mle_start = 0x44;
constexpr uint64_t fixture_noise = 0x55;
constexpr uint64_t prior_omega = 0x66;
constexpr uint64_t lis_subsample = 0x77;
}  // namespace rng_tag

}  // namespace sloppy
