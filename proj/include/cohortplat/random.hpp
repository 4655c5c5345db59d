#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace cohortplat {

// SplitMix64 finalizer. Used only to derive seeds; the stream itself is a
// standard Mersenne Twister.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for the stream of one (scenario, iteration) cell. Depends only on its
// arguments, so any scheduling of iterations over workers gives the same
// per-trial streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t scenario,
                                    std::uint64_t iteration) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ mix64(scenario + 0x632BE59BD9B4E019ULL));
  h = mix64(h ^ mix64(iteration + 0x85157AF5ULL));
  return h;
}

// Random stream owned by a single trial. All conversions from raw engine
// output are done here (not through <random> distributions) so results are
// identical across standard library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static RandomStream derive(std::uint64_t master, std::uint64_t scenario,
                             std::uint64_t iteration) {
    return RandomStream(derive_seed(master, scenario, iteration));
  }

  // Independent child stream; does not advance this stream.
  RandomStream split(std::uint64_t salt) const {
    return RandomStream(mix64(seed_ ^ mix64(salt + 0xD1B54A32D192ED03ULL)));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n), unbiased via rejection.
  std::size_t below(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

  // Index drawn with probability proportional to `weights`.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    // u landed in the rounding gap above the last cumulative sum
    for (std::size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0.0) return i;
    return 0;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace cohortplat
