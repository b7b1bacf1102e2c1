#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace mad {

// Counter-based generator: every draw is a pure function of (key, counter), so
// streams can be consumed out of order or in parallel and still reproduce.
// The mixer is two rounds of the SplitMix64 finalizer over the key/counter
// pair.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  // Derives an independent stream, e.g. per frame or per purpose.
  constexpr CounterRng substream(std::uint64_t tag) const {
    return CounterRng(mix(key_ ^ mix(tag + 0x632be59bd9b4e019ULL)));
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix(mix(key_ + 0x9e3779b97f4a7c15ULL * (counter + 1)) ^ key_);
  }

  // Uniform in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Unbiased integer in [0, bound) using rejection on the top range. `counter`
  // is advanced past every consumed draw.
  std::uint64_t below(std::uint64_t bound, std::uint64_t& counter) const {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
      const std::uint64_t x = bits(counter++);
      if (x < limit) return x % bound;
    }
  }

  // Standard normal via Box-Muller on counters (2c, 2c+1); one value per
  // counter, the sine branch is discarded so that draw c never depends on
  // whether draw c+1 is requested.
  double normal(std::uint64_t counter) const {
    double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

// Fisher-Yates permutation of [0, n) keyed by `rng`.
std::vector<std::size_t> seeded_permutation(std::size_t n, const CounterRng& rng);

}  // namespace mad
