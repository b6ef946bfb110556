#pragma once

#include <cstdint>

namespace evc {

/// SplitMix64 stream. Every draw is derived from integer arithmetic only,
/// except normal(), which uses Box-Muller on top of uniform().
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw.
  double normal() noexcept;

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Independent child stream, e.g. one per epoch or per utterance.
  SeededRng fork(std::uint64_t salt) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace evc
