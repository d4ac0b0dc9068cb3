#pragma once

#include <cstdint>
#include <span>

namespace tms {

/// xoshiro256** seeded through splitmix64.
///
/// Every random decision in the library (weight init, fold assignment,
/// batch shuffling) draws from this generator so that runs are reproducible
/// across platforms and standard-library implementations. The derived
/// helpers below avoid std:: distributions for the same reason.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace tms
