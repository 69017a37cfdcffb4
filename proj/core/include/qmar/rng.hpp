#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qmar {

/// Counter-based uniform generator: the i-th draw of stream `seed` is a pure
/// function of (seed, i). Version 1 is SplitMix64 keyed by a mixed seed.
class UniformStream {
 public:
  static constexpr int kVersion = 1;

  explicit UniformStream(std::uint64_t seed) noexcept;

  /// Draw number `index`, strictly inside (0,1).
  double at(std::uint64_t index) const noexcept;

  /// Next draw; advances the internal counter.
  double next() noexcept { return at(counter_++); }

  std::uint64_t counter() const noexcept { return counter_; }
  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

  std::vector<double> take(std::size_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of replicate `index` derived from a base seed.
constexpr std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return base ^ index;
}

}  // namespace qmar
