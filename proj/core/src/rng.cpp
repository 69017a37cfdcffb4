#include "qmar/rng.hpp"

namespace qmar {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

UniformStream::UniformStream(std::uint64_t seed) noexcept : key_(mix64(seed + kGolden)) {}

double UniformStream::at(std::uint64_t index) const noexcept {
  const std::uint64_t bits = mix64(key_ + (index + 1) * kGolden);
  // 53 random bits mapped to the midpoints of a 2^-53 grid: never 0 or 1.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> UniformStream::take(std::size_t n) {
  std::vector<double> out(n);
  for (auto& u : out) u = next();
  return out;
}

}  // namespace qmar
