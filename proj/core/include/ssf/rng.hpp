#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <utility>

namespace ssf {

/// Counter-based 64-bit generator: the n-th output is a SplitMix64 finalizer
/// applied to `key + n * golden`. Streams with different keys are
/// independent, so a task's randomness depends only on its key and never on
/// scheduling order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    ++counter_;
    return mix(key_ + counter_ * kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Derives a child seed from a master seed and a path of tags, e.g.
/// `derive_seed(master, {scenario, repetition})`.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = CounterRng::mix(master ^ 0x5DEECE66DULL);
  for (std::uint64_t t : tags) {
    h = CounterRng::mix(h ^ CounterRng::mix(t + 0x9E3779B97F4A7C15ULL));
  }
  return h;
}

/// Fisher-Yates shuffle with a portable draw sequence (std::shuffle is
/// implementation-defined).
template <typename Vec>
void shuffle(Vec& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace ssf
