#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedelim/instance.hpp"
#include "fedelim/random.hpp"
#include "fedelim/schedule.hpp"

namespace fedelim {

enum class TraceLevel { None, Events, Full };

struct RunConfig {
  double delta = 0.1;        // target error probability, in (0,1)
  double uplink_cost = 0.0;  // C, per scalar sent per client uplink
  double sigma = 1.0;        // confidence-radius scale (sub-Gaussian proxy)
  Schedule schedule = Schedule::exponential(2.0);
  std::uint64_t max_steps = std::uint64_t{1} << 31; // safety cap
  std::uint64_t seed = 0;
  std::uint32_t trial = 0;   // folded into the reward-stream keys
  TraceLevel trace_level = TraceLevel::None;
};

/// Local confidence radius at step n:
///   sigma * sqrt(2 ln(8 K M n^2 / delta) / n).
double local_radius(std::uint64_t n, std::uint32_t num_arms, std::uint32_t num_clients,
                    double delta, double sigma = 1.0);

/// Global confidence radius at step n (aggregated over M clients):
///   sigma * sqrt(2 ln(8 K n^2 / delta) / (M n)).
double global_radius(std::uint64_t n, std::uint32_t num_arms, std::uint32_t num_clients,
                     double delta, double sigma = 1.0);

enum class TraceEventType { Pull, LocalElim, GlobalElim, CommRound, DeclareLocal, DeclareGlobal };

std::string_view to_string(TraceEventType type);

/// One trace row. client/arm are 0-based here; the CSV dump is 1-based.
/// Server-side rows (comm_round, global_elim, declare_global) carry client 0
/// in the CSV. `value` is the reward for pulls, the empirical mean for
/// eliminations and declarations, and |S_g| at send time for comm rounds.
struct TraceEvent {
  std::uint64_t step;
  TraceEventType type;
  std::uint32_t client;
  std::uint32_t arm;
  double value;
};

struct CommRound {
  std::uint64_t step;
  std::vector<std::uint32_t> active_arms; // S_g at send time
};

struct Trace {
  TraceLevel level = TraceLevel::None;
  std::uint32_t num_arms = 0;
  std::uint32_t num_clients = 0;
  double delta = 0.0;
  double sigma = 1.0;
  std::vector<TraceEvent> events;           // Events and Full
  std::vector<CommRound> comm_rounds;       // Events and Full
  std::vector<std::vector<double>> samples; // Full only; [k*M+m] -> rewards in pull order
  std::vector<std::pair<double, double>> radii; // Full only; (local, global) at step i+1
};

/// One elimination machine. Active sets only shrink; at the top of every
/// iteration a non-empty set has >= 2 members (size-1 sets are declared and
/// emptied in the iteration that produced them).
struct EngineState {
  std::uint64_t step = 0; // n
  std::vector<std::vector<std::uint32_t>> local_active; // per client, ascending
  std::vector<std::uint32_t> global_active;             // ascending
  std::vector<double> reward_sums;   // K*M, layout as ProblemInstance::means
  std::vector<std::uint64_t> pull_counts;
  std::vector<std::optional<std::uint32_t>> local_declared;
  std::optional<std::uint32_t> global_declared;
  std::uint64_t total_pulls = 0;
  double comm_cost = 0.0;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> comm_log; // (step, |S_g| at send)
  bool event_e_ok = true; // running confidence-band check

  double empirical_mean(std::uint32_t k, std::uint32_t m, std::uint32_t num_clients) const {
    const std::size_t i = static_cast<std::size_t>(k) * num_clients + m;
    return reward_sums[i] / static_cast<double>(pull_counts[i]);
  }
};

struct RunResult {
  std::vector<std::optional<std::uint32_t>> local_declarations; // per client
  std::optional<std::uint32_t> global_declaration;
  std::uint64_t stop_step = 0;
  std::uint64_t total_pulls = 0;
  std::vector<std::uint64_t> pull_counts; // K*M
  double comm_cost = 0.0;
  std::uint64_t comm_round_count = 0;
  double total_cost = 0.0; // total_pulls + comm_cost, exactly
  bool event_e_holds = true;
  bool hit_max_steps = false;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> comm_log;

  bool complete() const;
};

/**
 * Deterministic elimination state machine. Each step() call runs exactly one
 * iteration:
 *   1. n <- n+1.
 *   2. Per client m (ascending): form S_m = S_l,m U S_g; if |S_m| > 1 pull
 *      every arm in S_m once and update its running (sum, count).
 *   3. Local elimination: drop k from S_l,m when the local leader's mean
 *      beats it by >= 2*local_radius(n).
 *   4. Declare the local best when |S_l,m| = 1, then empty the set.
 *   5. If |S_g| > 1 and n is a communication step: charge C*M*|S_g|, average
 *      the per-client means of each arm in S_g, and drop arms trailing the
 *      leader by >= 2*global_radius(n).
 *   6. Declare the global best when |S_g| = 1, then empty the set.
 *   7. Terminated once every local set and the global set are empty
 *      (re-evaluated from the current sets, not the S_m snapshots).
 *
 * Same (instance, config) => identical run, sample for sample.
 */
class EliminationEngine {
 public:
  EliminationEngine(const ProblemInstance& instance, const RunConfig& config);

  /// Runs one iteration. Returns false (and does nothing) once terminated.
  bool step();
  bool terminated() const;

  const EngineState& state() const { return state_; }
  const Trace& trace() const { return trace_; }
  const RunConfig& config() const { return config_; }

  /// Snapshot of the run so far (complete once terminated).
  RunResult result() const;

 private:
  void pull(std::uint32_t k, std::uint32_t m);
  bool all_done() const;

  const ProblemInstance* instance_;
  RunConfig config_;
  EngineState state_;
  Trace trace_;
  RewardStream streams_;
  std::vector<double> true_global_means_; // for the running band check
  std::vector<std::uint32_t> scratch_union_;
};

/// Iterates the machine until termination or config.max_steps.
RunResult run(const ProblemInstance& instance, const RunConfig& config);

/// Replays a Full-level trace against the instance's true means and reports
/// whether every empirical mean stayed inside its confidence band: every
/// prefix mean of every (k,m) sample sequence within local_radius(s) of the
/// true mean, and every server-side aggregate within global_radius(n) at the
/// step it was formed. Throws std::invalid_argument without sample data.
bool event_e_holds(const Trace& trace, const ProblemInstance& instance);

struct CostBreakdown {
  std::uint64_t total_pulls = 0;
  double comm_cost = 0.0;
  double total_cost = 0.0;
};

CostBreakdown cost_of(const RunResult& result);

/// CSV with columns (n,event_type,client,arm,value); 1-based indices.
void write_trace_csv(const Trace& trace, std::ostream& out);

} // namespace fedelim
