#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace lgcn {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to turn stream names into stream ids.
constexpr std::uint64_t stream_id(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based generator: the n-th output is mix64(key + n * golden).
///
/// A generator is fully described by (key, counter), so independent
/// substreams are derived by hashing (seed, stream, index) into a new key.
/// Output does not depend on how work is scheduled across substreams.
/// Sampling routines are implemented here rather than through <random>
/// distributions so that generated datasets are identical across standard
/// library implementations.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) noexcept : key_(mix64(seed)) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL))) {}
  CounterRng(std::uint64_t seed, std::string_view stream) noexcept
      : CounterRng(seed, stream_id(stream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Independent child stream keyed by `index`.
  [[nodiscard]] CounterRng substream(std::uint64_t index) const noexcept {
    CounterRng child;
    child.key_ = mix64(key_ ^ mix64(index ^ 0xd1b54a32d192ed03ULL));
    return child;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1].
  double uniform_open0() noexcept { return 1.0 - uniform(); }

  /// Unbiased integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Box-Muller; consumes exactly two outputs per call.
  double normal(double mean, double sd) noexcept {
    const double u1 = uniform_open0();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Exponential with the given rate, truncated to [lo, hi] (inverse CDF).
  double truncated_exponential(double rate, double lo, double hi) noexcept {
    const double span = 1.0 - std::exp(-rate * (hi - lo));
    const double x = lo - std::log1p(-uniform() * span) / rate;
    return x < lo ? lo : (x > hi ? hi : x);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace lgcn
