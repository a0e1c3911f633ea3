#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedelim/instance.hpp"

namespace fedelim {

/// High-probability budget for settling one (arm, client) cell locally:
///   102 * ln(64 sqrt(8KM/delta) / gap^2) / gap^2 + 1.
double t_km(double gap, std::uint32_t num_arms, std::uint32_t num_clients, double delta);

/// Global analogue, with M in the denominator:
///   102 * ln(64 sqrt(8K/delta) / (M gap^2)) / (M gap^2) + 1.
double t_k(double gap, std::uint32_t num_arms, std::uint32_t num_clients, double delta);

/// Total budget T = sum_k sum_m max{T_{k,m}, T_k} over the gap structure.
double t_total(const ProblemInstance& instance, double delta);

struct SparseCommBounds {
  double pull_bound = 0.0;  // sum_k sum_m max{T_{k,m}, 2 T_k}
  double comm_bound = 0.0;  // C * M * sum_k ceil(log2 T_k)
  double total_bound = 0.0; // 3 T
  bool precondition_ok = true; // C ln T_k <= T_k for all k
};

SparseCommBounds sparse_comm_bounds(const ProblemInstance& instance, double delta,
                               double uplink_cost);

/// This bound circulates with and without a factor of 2 on the log term;
/// the doubled form is the default.
enum class LowerBoundForm { DoubledLog, SingleLog };

/// sum_k sum_m max{ c/gap_{k,m}^2, c/(M^2 gap_k^2) } with
/// c = 2 ln(1/(2.4 delta)) (DoubledLog) or ln(1/(2.4 delta)) (SingleLog).
/// Requires delta < 1/2.4, else the log is non-positive (throws).
double lower_bound(const ProblemInstance& instance, double delta,
                   LowerBoundForm form = LowerBoundForm::DoubledLog);

enum class RadiusScope { Local, Global };

/// Smallest n such that the confidence radius is <= gap/4 at every n' >= n.
/// The radius is unimodal in n, so the answer is found by bracketed search
/// above its maximizer. Throws std::overflow_error past 2^62.
std::uint64_t critical_sample_size(double gap, std::uint32_t num_arms,
                                   std::uint32_t num_clients, double delta,
                                   RadiusScope scope);

/// Closed-form upper bound on critical_sample_size obtained from the
/// Lambert-W lower bound W_{-1}(y) > e/(e-1) * ln(-y); cross-check only.
std::uint64_t critical_sample_size_upper(double gap, std::uint32_t num_arms,
                                         std::uint32_t num_clients, double delta,
                                         RadiusScope scope);

/// Total-cost-minimizing period for periodic communication:
///   H* = sqrt(C T / (M K)).  C = 0 degenerates to 1 (communicate always).
double optimal_period(double uplink_cost, double total_budget,
                      std::uint32_t num_clients, std::uint32_t num_arms);

/// Unique solution of lambda (ln lambda)^2 = rhs on (1, inf), by bisection.
double solve_exponential_base(double rhs);

/// Total-cost-bound-minimizing exponential base: the unique lambda > 1 with
///   lambda (ln lambda)^2 = (C M / T) * sum_k ln T_k.
/// C = 0 returns the boundary marker 1.0 (communicate maximally often).
double optimal_base(double uplink_cost, std::uint32_t num_clients, double total_budget,
                    std::span<const double> t_k_values);

/// Worst-case bound row for one communication scheme. The plain columns
/// instantiate the per-round forms (ceilings kept); the relaxed columns use
/// the closed forms obtained from ceil(x) <= x + 1.
struct SchemeBoundRow {
  std::string scheme;
  double pull_bound = 0.0;
  double comm_bound = 0.0;
  double total_bound = 0.0;
  double pull_bound_relaxed = 0.0;
  double comm_bound_relaxed = 0.0;
  double total_bound_relaxed = 0.0;
};

/// Rows: Periodic(H), Exponential(base), SuperExponential. For the
/// super-exponential scheme the pull column uses the exact next-step form
/// (steps at most square between consecutive communications) and the comm
/// column counts ceil(log2 log2 T_k) + 1 rounds per arm.
std::vector<SchemeBoundRow> scheme_bound_table(const ProblemInstance& instance,
                                               double delta, double uplink_cost,
                                               std::uint64_t period, double base = 2.0);

/// Everything the theory computes for one (instance, delta, C) triple.
struct BoundReport {
  std::uint32_t num_arms = 0;
  std::uint32_t num_clients = 0;
  double delta = 0.0;
  double uplink_cost = 0.0;
  std::vector<double> t_km_values; // K*M, layout as ProblemInstance::means
  std::vector<double> t_k_values;  // K
  double total_budget = 0.0;       // T
  double sparse_pull_bound = 0.0;
  double sparse_comm_bound = 0.0;
  double sparse_total_bound = 0.0;
  bool precondition_ok = true;
  double lower_bound_doubled_log = 0.0;
  double lower_bound_single_log = 0.0;
  double h_star = 0.0;
  double lambda_star = 0.0;
  std::uint64_t table_period = 0; // H used for the scheme table
  std::vector<SchemeBoundRow> scheme_table;
  std::vector<std::string> warnings;
};

/// Computes the full report. `period` defaults to round(H*) (min 1).
BoundReport bound_report(const ProblemInstance& instance, double delta,
                         double uplink_cost,
                         std::optional<std::uint64_t> period = std::nullopt);

std::string bound_report_text(const BoundReport& report);
std::string bound_report_json(const BoundReport& report);
BoundReport bound_report_from_json(const std::string& text);

} // namespace fedelim
