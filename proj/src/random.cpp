#include "fedelim/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedelim {

std::uint64_t mix_stream_key(const StreamKey& key) {
  std::uint64_t state = key.seed;
  std::uint64_t h = splitmix64(state);
  state = h ^ (0x7f4a7c15ULL + key.trial);
  h = splitmix64(state);
  state = h ^ (0x9e3779b9ULL + key.client);
  h = splitmix64(state);
  state = h ^ (0xbf58476dULL + key.arm);
  return splitmix64(state);
}

RewardStream::RewardStream(std::uint64_t seed, std::uint32_t trial, std::uint32_t num_arms,
                           std::uint32_t num_clients)
    : num_clients_(num_clients) {
  subs_.reserve(static_cast<std::size_t>(num_arms) * num_clients);
  for (std::uint32_t k = 0; k < num_arms; ++k) {
    for (std::uint32_t m = 0; m < num_clients; ++m) {
      subs_.push_back(Substream{Xoshiro256pp(mix_stream_key({seed, trial, m, k})), 0.0, false});
    }
  }
}

double RewardStream::gaussian(std::uint32_t k, std::uint32_t m, double mean) {
  Substream& s = sub(k, m);
  if (s.has_spare) {
    s.has_spare = false;
    return mean + s.spare;
  }
  const double u1 = s.rng.next_open_unit();
  const double u2 = s.rng.next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  s.spare = r * std::sin(theta);
  s.has_spare = true;
  return mean + r * std::cos(theta);
}

double RewardStream::bernoulli(std::uint32_t k, std::uint32_t m, double p) {
  return sub(k, m).rng.next_unit() < p ? 1.0 : 0.0;
}

double RewardStream::pool_draw(std::uint32_t k, std::uint32_t m, const std::vector<double>& pool) {
  return pool[sub(k, m).rng.next_below(pool.size())];
}

double draw_reward(const ProblemInstance& instance, RewardStream& stream, std::uint32_t k,
                   std::uint32_t m) {
  switch (instance.kind) {
    case RewardKind::GaussianUnitVariance:
      return stream.gaussian(k, m, instance.mean(k, m));
    case RewardKind::Bernoulli:
      return stream.bernoulli(k, m, instance.mean(k, m));
    case RewardKind::EmpiricalPool:
      return stream.pool_draw(k, m, instance.pool(k, m));
  }
  throw std::logic_error("unknown reward kind");
}

} // namespace fedelim
