#pragma once

#include <cstdint>

namespace sevridge {

// SplitMix64 generator (Steele, Lea & Flood 2014). Chosen because the
// output sequence is trivially portable across languages; every draw in
// the pipeline goes through this type.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  // Independent stream for item `index` of a run seeded with `master`.
  static constexpr SplitMix64 for_stream(std::uint64_t master,
                                         std::uint64_t index) {
    return SplitMix64(master ^ (index * kGolden));
  }

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1) with 53 bits of mantissa.
  constexpr double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) {
    return lo + uniform() * (hi - lo);
  }

  // Inclusive on both ends.
  constexpr std::int64_t randint(std::int64_t lo, std::int64_t hi) {
    const double span = static_cast<double>(hi - lo) + 1.0;
    for (;;) {
      const double u = uniform();
      if (u >= 1.0) continue;  // unreachable with the mantissa method
      const auto offset = static_cast<std::int64_t>(u * span);
      if (offset <= hi - lo) return lo + offset;
    }
  }

  constexpr std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace sevridge
