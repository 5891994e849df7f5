#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace srn {

/// Seeded generator with portable derived draws.
///
/// std::mt19937_64 output is fully specified by the standard, while the
/// standard distributions are not, so draws are derived by hand here to keep
/// results identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Component seed offsets fanned out from one global seed.
enum class SeedStream : std::uint64_t {
  Split = 1,
  Balance = 2,
  Embedding = 3,
  Init = 4,
  Training = 5,
};

inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  return seed + static_cast<std::uint64_t>(stream);
}

}  // namespace srn
