#include "fedelim/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "text_util.hpp"

namespace fedelim {

using Rational = boost::multiprecision::cpp_rational;

std::string_view to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::GaussianUnitVariance: return "gaussian";
    case RewardKind::Bernoulli: return "bernoulli";
    case RewardKind::EmpiricalPool: return "empirical";
  }
  return "?";
}

std::optional<RewardKind> reward_kind_from_string(std::string_view token) {
  if (token == "gaussian") return RewardKind::GaussianUnitVariance;
  if (token == "bernoulli") return RewardKind::Bernoulli;
  if (token == "empirical") return RewardKind::EmpiricalPool;
  return std::nullopt;
}

namespace {

// Exact mean of a pool when every value sits on the half-point grid
// (MovieLens ratings are multiples of 0.5); nullopt otherwise.
std::optional<Rational> rational_pool_mean(const std::vector<double>& pool) {
  Rational sum_halves = 0;
  for (double v : pool) {
    const double twice = 2.0 * v;
    const double rounded = std::nearbyint(twice);
    if (!std::isfinite(twice) || std::fabs(twice - rounded) > 1e-9 ||
        std::fabs(rounded) > 9e15) {
      return std::nullopt;
    }
    sum_halves += Rational(static_cast<long long>(rounded));
  }
  return sum_halves / Rational(2 * static_cast<long long>(pool.size()));
}

// Per-cell values used for tie detection: exact rationals where available,
// otherwise the stored doubles compared exactly.
struct ExactMeans {
  bool rational = false;
  std::vector<Rational> values; // K*M when rational
  const ProblemInstance* instance = nullptr;

  int compare(std::uint32_t k1, std::uint32_t m1, std::uint32_t k2, std::uint32_t m2) const {
    if (rational) {
      const auto& a = values[static_cast<std::size_t>(k1) * instance->num_clients + m1];
      const auto& b = values[static_cast<std::size_t>(k2) * instance->num_clients + m2];
      return a < b ? -1 : (a == b ? 0 : 1);
    }
    const double a = instance->mean(k1, m1);
    const double b = instance->mean(k2, m2);
    return a < b ? -1 : (a == b ? 0 : 1);
  }

  // Compare the across-client sums of two arms (dividing by M preserves order).
  int compare_global(std::uint32_t k1, std::uint32_t k2) const {
    const std::uint32_t M = instance->num_clients;
    if (rational) {
      Rational a = 0, b = 0;
      for (std::uint32_t m = 0; m < M; ++m) {
        a += values[static_cast<std::size_t>(k1) * M + m];
        b += values[static_cast<std::size_t>(k2) * M + m];
      }
      return a < b ? -1 : (a == b ? 0 : 1);
    }
    double a = 0, b = 0;
    for (std::uint32_t m = 0; m < M; ++m) {
      a += instance->mean(k1, m);
      b += instance->mean(k2, m);
    }
    return a < b ? -1 : (a == b ? 0 : 1);
  }
};

ExactMeans make_exact_means(const ProblemInstance& instance, std::vector<std::string>* warnings) {
  ExactMeans exact;
  exact.instance = &instance;
  if (instance.kind != RewardKind::EmpiricalPool) return exact;
  exact.values.reserve(instance.pools.size());
  for (const auto& pool : instance.pools) {
    if (pool.empty()) return exact; // validate reports this separately
    auto mean = rational_pool_mean(pool);
    if (!mean) {
      if (warnings) {
        warnings->push_back(
            "pool values off the half-point grid; tie detection falls back to exact"
            " double comparison");
      }
      exact.values.clear();
      return exact;
    }
    exact.values.push_back(std::move(*mean));
  }
  exact.rational = true;
  return exact;
}

// argmax with exact tie detection; second member of the pair is false when
// the maximum is attained more than once.
template <typename Less>
std::pair<std::uint32_t, bool> unique_argmax(std::uint32_t count, Less less) {
  std::uint32_t best = 0;
  bool unique = true;
  for (std::uint32_t i = 1; i < count; ++i) {
    if (less(best, i)) {
      best = i;
      unique = true;
    } else if (!less(i, best)) {
      unique = false; // exact tie with the current best
    }
  }
  return {best, unique};
}

double pool_mean_double(const std::vector<double>& pool) {
  double sum = 0.0;
  for (double v : pool) sum += v;
  return sum / static_cast<double>(pool.size());
}

} // namespace

ValidationReport validate(const ProblemInstance& instance) {
  ValidationReport report;
  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;

  if (K < 2) report.violations.push_back("num_arms must be at least 2");
  if (M < 1) report.violations.push_back("num_clients must be at least 1");
  if (M == 1) report.warnings.push_back("single-client instance: global and local problems coincide");
  if (instance.means.size() != static_cast<std::size_t>(K) * M) {
    report.violations.push_back("means matrix is not K x M");
    return report;
  }
  for (std::uint32_t k = 0; k < K; ++k) {
    for (std::uint32_t m = 0; m < M; ++m) {
      const double mu = instance.mean(k, m);
      if (!std::isfinite(mu)) {
        report.violations.push_back("mean of arm " + std::to_string(k + 1) + " client " +
                                    std::to_string(m + 1) + " is not finite");
      } else if (instance.kind == RewardKind::Bernoulli && (mu < 0.0 || mu > 1.0)) {
        report.violations.push_back("Bernoulli mean out of [0,1] at arm " + std::to_string(k + 1) +
                                    " client " + std::to_string(m + 1));
      }
    }
  }

  if (instance.kind == RewardKind::EmpiricalPool) {
    if (instance.pools.size() != instance.means.size()) {
      report.violations.push_back("pools matrix is not K x M");
      return report;
    }
    for (std::uint32_t k = 0; k < K; ++k) {
      for (std::uint32_t m = 0; m < M; ++m) {
        const auto& pool = instance.pool(k, m);
        if (pool.empty()) {
          report.violations.push_back("empty pool at arm " + std::to_string(k + 1) + " client " +
                                      std::to_string(m + 1));
        } else if (instance.mean(k, m) != pool_mean_double(pool)) {
          report.violations.push_back("stored mean of arm " + std::to_string(k + 1) + " client " +
                                      std::to_string(m + 1) + " differs from its pool mean");
        }
      }
    }
  } else if (!instance.pools.empty()) {
    report.violations.push_back("pools present on a non-empirical instance");
  }
  if (!report.violations.empty()) return report;

  const ExactMeans exact = make_exact_means(instance, &report.warnings);
  for (std::uint32_t m = 0; m < M; ++m) {
    auto [best, unique] =
        unique_argmax(K, [&](std::uint32_t a, std::uint32_t b) { return exact.compare(a, m, b, m) < 0; });
    (void)best;
    if (!unique) {
      report.violations.push_back("local best of client " + std::to_string(m + 1) + " not unique");
    }
  }
  auto [gbest, gunique] =
      unique_argmax(K, [&](std::uint32_t a, std::uint32_t b) { return exact.compare_global(a, b) < 0; });
  (void)gbest;
  if (!gunique) report.violations.push_back("global best arm not unique");
  return report;
}

BestArmProfile compute_best_arms(const ProblemInstance& instance) {
  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;
  const ExactMeans exact = make_exact_means(instance, nullptr);

  BestArmProfile profile;
  profile.local_best.resize(M);
  for (std::uint32_t m = 0; m < M; ++m) {
    auto [best, unique] =
        unique_argmax(K, [&](std::uint32_t a, std::uint32_t b) { return exact.compare(a, m, b, m) < 0; });
    if (!unique) {
      throw std::invalid_argument("local best of client " + std::to_string(m + 1) + " not unique");
    }
    profile.local_best[m] = best;
  }

  profile.global_means.resize(K);
  for (std::uint32_t k = 0; k < K; ++k) {
    double sum = 0.0;
    for (std::uint32_t m = 0; m < M; ++m) sum += instance.mean(k, m);
    profile.global_means[k] = sum / static_cast<double>(M);
  }
  auto [gbest, gunique] =
      unique_argmax(K, [&](std::uint32_t a, std::uint32_t b) { return exact.compare_global(a, b) < 0; });
  if (!gunique) throw std::invalid_argument("global best arm not unique");
  profile.global_best = gbest;
  return profile;
}

GapStructure compute_gaps(const ProblemInstance& instance) {
  const BestArmProfile profile = compute_best_arms(instance);
  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;

  GapStructure gaps;
  gaps.num_arms = K;
  gaps.num_clients = M;
  gaps.local_gaps.resize(static_cast<std::size_t>(K) * M);
  gaps.global_gaps.resize(K);

  for (std::uint32_t m = 0; m < M; ++m) {
    const std::uint32_t star = profile.local_best[m];
    const double best_mean = instance.mean(star, m);
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::uint32_t k = 0; k < K; ++k) {
      if (k == star) continue;
      const double gap = best_mean - instance.mean(k, m);
      gaps.local_gaps[static_cast<std::size_t>(k) * M + m] = gap;
      min_gap = std::min(min_gap, gap);
    }
    gaps.local_gaps[static_cast<std::size_t>(star) * M + m] = min_gap;
  }

  const std::uint32_t gstar = profile.global_best;
  const double gbest_mean = profile.global_means[gstar];
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::uint32_t k = 0; k < K; ++k) {
    if (k == gstar) continue;
    const double gap = gbest_mean - profile.global_means[k];
    gaps.global_gaps[k] = gap;
    min_gap = std::min(min_gap, gap);
  }
  gaps.global_gaps[gstar] = min_gap;
  return gaps;
}

ProblemInstance load_instance(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("instance file: missing header line");
  const auto fields = detail::split(detail::trim(line), ' ');
  std::vector<std::string_view> tokens;
  for (auto f : fields) {
    if (!f.empty()) tokens.push_back(f);
  }
  if (tokens.size() != 3) throw std::runtime_error("instance file: header must be \"K M kind\"");

  std::uint64_t K = 0, M = 0;
  if (!detail::parse_u64(tokens[0], K) || !detail::parse_u64(tokens[1], M) || K == 0 || M == 0) {
    throw std::runtime_error("instance file: K and M must be positive integers");
  }
  const auto kind = reward_kind_from_string(tokens[2]);
  if (!kind) throw std::runtime_error("instance file: unknown kind '" + std::string(tokens[2]) + "'");
  if (*kind == RewardKind::EmpiricalPool) {
    throw std::runtime_error("instance file: empirical instances are built via ingest, not this format");
  }

  ProblemInstance instance;
  instance.num_arms = static_cast<std::uint32_t>(K);
  instance.num_clients = static_cast<std::uint32_t>(M);
  instance.kind = *kind;
  instance.means.reserve(K * M);
  for (std::uint64_t k = 0; k < K; ++k) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("instance file: expected " + std::to_string(K) + " mean rows, got " +
                               std::to_string(k));
    }
    std::uint32_t found = 0;
    for (auto f : detail::split(detail::trim(line), ' ')) {
      if (f.empty()) continue;
      double value = 0.0;
      if (!detail::parse_double(f, value)) {
        throw std::runtime_error("instance file: line " + std::to_string(k + 2) +
                                 ": bad mean '" + std::string(f) + "'");
      }
      instance.means.push_back(value);
      ++found;
    }
    if (found != M) {
      throw std::runtime_error("instance file: line " + std::to_string(k + 2) + ": expected " +
                               std::to_string(M) + " means, got " + std::to_string(found));
    }
  }
  return instance;
}

ProblemInstance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  return load_instance(in);
}

void save_instance(const ProblemInstance& instance, std::ostream& out) {
  if (instance.kind == RewardKind::EmpiricalPool) {
    throw std::runtime_error("empirical instances cannot be saved in the text format");
  }
  out << instance.num_arms << ' ' << instance.num_clients << ' ' << to_string(instance.kind) << '\n';
  for (std::uint32_t k = 0; k < instance.num_arms; ++k) {
    for (std::uint32_t m = 0; m < instance.num_clients; ++m) {
      if (m) out << ' ';
      out << detail::format_double(instance.mean(k, m));
    }
    out << '\n';
  }
}

std::optional<ProblemInstance> builtin_instance(std::string_view name) {
  if (name == "eq17") {
    ProblemInstance instance;
    instance.num_arms = 4;
    instance.num_clients = 3;
    instance.kind = RewardKind::GaussianUnitVariance;
    instance.means = {0.9, 0.1, 0.1,  //
                      0.1, 0.9, 0.1,  //
                      0.1, 0.1, 0.9,  //
                      0.5, 0.5, 0.5};
    return instance;
  }
  if (name == "bernoulli-eq36") {
    // Rows are arms, columns are clients: arm 1 is every client's local best
    // and the global best.
    ProblemInstance instance;
    instance.num_arms = 3;
    instance.num_clients = 3;
    instance.kind = RewardKind::Bernoulli;
    instance.means = {0.9, 0.85, 0.7,  //
                      0.85, 0.8, 0.6,  //
                      0.1, 0.3, 0.5};
    return instance;
  }
  return std::nullopt;
}

} // namespace fedelim
