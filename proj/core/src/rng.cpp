#include "smc2/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace smc2 {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
  // All-zero is the one invalid xoshiro state; splitmix64 cannot emit four
  // zeros in a row, but keep the guarantee explicit.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

Rng Rng::from_state(const RngState& state) noexcept {
  Rng rng;
  rng.restore(state);
  return rng;
}

double Rng::normal() noexcept {
  const double u1 = uniform_positive();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_positive(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z;
    double v;
    do {
      z = normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_positive();
    if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
  }
}

Rng spawn_stream(std::uint64_t seed, std::uint64_t island_id, std::uint64_t epoch) {
  std::uint64_t h = seed;
  std::uint64_t key = splitmix64(h);
  h = key ^ (island_id * 0xd1b54a32d192ed03ULL);
  key = splitmix64(h);
  h = key ^ (epoch * 0x8cb92ba72f3d8dd7ULL);
  key = splitmix64(h);
  return Rng(key);
}

}  // namespace smc2
