#pragma once

#include <cstdint>
#include <limits>

namespace spgg {

/// SplitMix64 finalizer. Used both as the generator step and as the seed
/// hash, so derived seeds are reproducible by any implementation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// Hash of (master, a, b): mix64(mix64(mix64(master) ^ (a + 1) * gamma) ^ (b + 1) * gamma).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ ((a + 1) * kGoldenGamma));
  h = mix64(h ^ ((b + 1) * kGoldenGamma));
  return h;
}

/// Stream tags keep independent consumers of one master seed apart.
enum class StreamTag : std::uint64_t {
  kInit = 1,
  kWeights = 2,
  kAgent = 3,
  kBaseline = 4,
};

/// Seed for agent `agent` at epoch `epoch` of consumer `tag`.
constexpr std::uint64_t agent_stream_seed(std::uint64_t master, StreamTag tag,
                                          std::uint64_t epoch,
                                          std::uint64_t agent) noexcept {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(tag), epoch),
                     agent, 0);
}

/// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) for small n (n <= 2^32).
  constexpr std::uint32_t below(std::uint32_t n) noexcept {
    return static_cast<std::uint32_t>(((*this)() >> 32) * n >> 32);
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace spgg
