#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace smc2 {

/// Complete state of an Rng. Four 64-bit words; copying it is a snapshot.
struct RngState {
  std::array<std::uint64_t, 4> words{};

  friend bool operator==(const RngState&, const RngState&) = default;
};

/// xoshiro256++ with value-semantics snapshots.
///
/// Every sampler below consumes a fixed number of raw draws per call (gamma
/// is the one exception, it is a rejection sampler), so the sequence of
/// variates produced after restore() is fully determined by the snapshot.
/// Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0x5eed);

  static Rng from_state(const RngState& state) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  RngState snapshot() const noexcept { return RngState{s_}; }
  void restore(const RngState& state) noexcept { s_ = state.words; }

  /// Uniform on [0, 1), 53 bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }
  /// Uniform on (0, 1]; safe to take the log of.
  double uniform_positive() noexcept { return 1.0 - uniform(); }

  /// Standard normal by Box-Muller; always consumes exactly two draws and
  /// caches nothing.
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  /// Gamma(shape, 1) by Marsaglia-Tsang. Consumes a variable number of draws.
  double gamma(double shape);

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Deterministic stream for (seed, island, epoch). Distinct triples give
/// generators seeded from well-separated splitmix64 hashes.
Rng spawn_stream(std::uint64_t seed, std::uint64_t island_id, std::uint64_t epoch);

/// Island id reserved for the sampler-level stream (resampling of islands).
inline constexpr std::uint64_t kSamplerStream = std::numeric_limits<std::uint64_t>::max();

}  // namespace smc2
