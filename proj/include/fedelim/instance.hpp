#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedelim {

enum class RewardKind { GaussianUnitVariance, Bernoulli, EmpiricalPool };

std::string_view to_string(RewardKind kind);
std::optional<RewardKind> reward_kind_from_string(std::string_view token);

/// A problem instance: the K x M matrix of arm means plus the reward model
/// behind each (arm, client) cell. Arm k of client m has mean `mean(k, m)`.
/// Indices are 0-based in code and 1-based in every textual interface.
struct ProblemInstance {
  std::uint32_t num_arms = 0;    // K
  std::uint32_t num_clients = 0; // M
  RewardKind kind = RewardKind::GaussianUnitVariance;
  std::vector<double> means; // K*M, row-major: means[k * num_clients + m]
  // EmpiricalPool only: pools[k * num_clients + m] holds the reward values
  // that cell draws from, uniformly at random. Empty for the other kinds.
  std::vector<std::vector<double>> pools;

  double mean(std::uint32_t k, std::uint32_t m) const {
    return means[static_cast<std::size_t>(k) * num_clients + m];
  }
  const std::vector<double>& pool(std::uint32_t k, std::uint32_t m) const {
    return pools[static_cast<std::size_t>(k) * num_clients + m];
  }
};

/// Outcome of `validate`. Violations are data, not faults: an instance that
/// breaks an invariant yields a report naming the offending client/arm and
/// rule. Warnings flag permitted-but-unusual configurations (e.g. M = 1).
struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const ProblemInstance& instance);

/// The answer vector: per-client local best arms plus the global best arm
/// (the arm maximizing the across-client average mean).
struct BestArmProfile {
  std::vector<std::uint32_t> local_best; // one arm index per client
  std::uint32_t global_best = 0;
  std::vector<double> global_means; // per arm: sum_m mean(k,m) / M
};

/// Exact argmax over the mean matrix. Throws std::invalid_argument if a
/// local or global argmax is not unique (validate() catches this first).
/// For EmpiricalPool instances the comparisons use exact rational pool
/// means, so half-point rating grids cannot mask or invent ties.
BestArmProfile compute_best_arms(const ProblemInstance& instance);

/// Sub-optimality gaps. For k != k*_m, local_gap(k,m) is the distance to the
/// local best mean; the best arm itself carries the smallest gap among its
/// rivals. Global gaps are defined the same way on the averaged means.
struct GapStructure {
  std::uint32_t num_arms = 0;
  std::uint32_t num_clients = 0;
  std::vector<double> local_gaps;  // K*M, layout as ProblemInstance::means
  std::vector<double> global_gaps; // K

  double local_gap(std::uint32_t k, std::uint32_t m) const {
    return local_gaps[static_cast<std::size_t>(k) * num_clients + m];
  }
  double global_gap(std::uint32_t k) const { return global_gaps[k]; }
};

GapStructure compute_gaps(const ProblemInstance& instance);

// Instance text format: header line "K M kind" (kind: gaussian | bernoulli)
// followed by K lines of M space-separated means. EmpiricalPool instances
// are built from rating tables (see ingest.hpp), never from this format.
ProblemInstance load_instance(std::istream& in);
ProblemInstance load_instance_file(const std::string& path);
void save_instance(const ProblemInstance& instance, std::ostream& out);

/// Built-in benchmark instances, selectable by name in the CLI:
/// "eq17" (4 arms x 3 clients, Gaussian) and "bernoulli-eq36" (3x3).
std::optional<ProblemInstance> builtin_instance(std::string_view name);

} // namespace fedelim
