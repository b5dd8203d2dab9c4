#pragma once

#include <cstdint>
#include <random>

namespace muxsim {

/// SplitMix64 finalizer (Steele, Lea & Flood). Part of the stable seeding
/// interface: changing it changes every simulated tally.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream with index `stream_index` under `master_seed`:
///
///   stream_seed(s, k) = splitmix64(splitmix64(s) ^ (0xD1B54A32D192ED03 * (k + 1)))
///
/// The engine seeded with it is std::mt19937_64, whose output sequence is fixed
/// by the C++ standard.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t stream_index) noexcept {
  return splitmix64(splitmix64(master_seed) ^ (0xD1B54A32D192ED03ULL * (stream_index + 1)));
}

/// A single-owner random stream. Not thread-safe; give each worker its own.
class RandomStream {
public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : engine_(stream_seed(master_seed, stream_index)) {}

  static constexpr result_type min() noexcept { return std::mt19937_64::min(); }
  static constexpr result_type max() noexcept { return std::mt19937_64::max(); }

  result_type operator()() { return engine_(); }

  /// Uniform double in [0, 1) built from the top 53 bits. Used instead of
  /// std::uniform_real_distribution, whose output is implementation-defined.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

}  // namespace muxsim
