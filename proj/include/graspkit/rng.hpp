#pragma once

#include <cstdint>
#include <string_view>

namespace graspkit {

/// Counter-based SplitMix64 stream.
///
/// Output k of a stream keyed by `seed` is `mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)`
/// where `mix64` is the SplitMix64 finalizer. Nothing here touches
/// <random> distributions, whose output is implementation-defined, so every
/// draw is identical across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). `n` must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (no cached second value).
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Child seed for a named sub-stream, e.g. derive_seed(global, "mug-0003").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace graspkit
