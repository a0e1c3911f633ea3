#pragma once

#include <cstdint>
#include <vector>

#include "fedelim/instance.hpp"

namespace fedelim {

/// splitmix64 step; used for seeding and key mixing.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ with a fixed, portable implementation so that equal keys
/// produce bitwise-equal sequences on every platform.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    for (auto& word : state_) word = splitmix64(seed);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in (0, 1]; never 0, so log() is safe.
  double next_open_unit() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform index in [0, n) via 128-bit multiply-shift.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

/// Identifies one reward substream. Streams with equal keys replay the same
/// sequence; distinct keys behave independently.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t trial = 0;
  std::uint32_t client = 0;
  std::uint32_t arm = 0;
};

std::uint64_t mix_stream_key(const StreamKey& key);

/// One deterministic reward substream per (arm, client) cell, keyed by
/// (seed, trial, client, arm). Single-owner mutable state: a stream is never
/// shared between concurrent runs.
class RewardStream {
 public:
  RewardStream(std::uint64_t seed, std::uint32_t trial, std::uint32_t num_arms,
               std::uint32_t num_clients);

  /// Normal(mean, 1) via Box-Muller (explicit formulas; reproducible).
  double gaussian(std::uint32_t k, std::uint32_t m, double mean);
  /// {0,1}-valued with the given success probability.
  double bernoulli(std::uint32_t k, std::uint32_t m, double p);
  /// Uniform draw from a non-empty pool.
  double pool_draw(std::uint32_t k, std::uint32_t m, const std::vector<double>& pool);

 private:
  struct Substream {
    Xoshiro256pp rng;
    double spare = 0.0;
    bool has_spare = false;
  };
  Substream& sub(std::uint32_t k, std::uint32_t m) {
    return subs_[static_cast<std::size_t>(k) * num_clients_ + m];
  }
  std::uint32_t num_clients_;
  std::vector<Substream> subs_;
};

/// Draws one reward for arm k of client m according to the instance's
/// reward kind.
double draw_reward(const ProblemInstance& instance, RewardStream& stream,
                   std::uint32_t k, std::uint32_t m);

} // namespace fedelim
