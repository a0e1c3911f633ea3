#pragma once

// Naive reference simulator: a straight transliteration of the elimination
// protocol, used as an equivalence oracle for EliminationEngine. It keeps
// its own state in std::set containers, re-derives schedule membership by
// direct enumeration, and shares no state-machine code with the engine.
// The confidence-radius formulas are shared on purpose; they carry their
// own frozen-value tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fedelim/engine.hpp"
#include "fedelim/instance.hpp"
#include "fedelim/random.hpp"
#include "fedelim/schedule.hpp"

namespace fedelim::testing {

inline bool naive_is_comm_step(const Schedule& schedule, std::uint64_t n) {
  switch (schedule.kind) {
    case ScheduleKind::EveryStep:
      return true;
    case ScheduleKind::Exponential: {
      for (std::uint64_t t = 0;; ++t) {
        const double value = std::pow(schedule.base, static_cast<double>(t));
        if (!(value < 9.2e18)) return false;
        const auto step = static_cast<std::uint64_t>(std::ceil(value));
        if (step == n) return true;
        if (step > n) return false;
      }
    }
    case ScheduleKind::Periodic: {
      for (std::uint64_t step = schedule.offset; step <= n; step += schedule.period) {
        if (step == n) return true;
      }
      return false;
    }
    case ScheduleKind::SuperExponential: {
      if (n == 1) return schedule.include_first;
      double step = 2.0;
      while (step < 9.2e18) {
        if (static_cast<std::uint64_t>(step) == n) return true;
        if (step > static_cast<double>(n)) return false;
        step *= step;
      }
      return false;
    }
  }
  return false;
}

class ReferenceSimulator {
 public:
  ReferenceSimulator(const ProblemInstance& instance, const RunConfig& config)
      : instance_(&instance),
        config_(config),
        streams_(config.seed, config.trial, instance.num_arms, instance.num_clients) {
    for (std::uint32_t m = 0; m < instance.num_clients; ++m) {
      std::set<std::uint32_t> all;
      for (std::uint32_t k = 0; k < instance.num_arms; ++k) all.insert(k);
      local_.push_back(all);
    }
    for (std::uint32_t k = 0; k < instance.num_arms; ++k) global_.insert(k);
    local_declared_.assign(instance.num_clients, std::nullopt);
  }

  bool terminated() const {
    if (!global_.empty()) return false;
    for (const auto& set : local_) {
      if (!set.empty()) return false;
    }
    return true;
  }

  void step() {
    const std::uint32_t K = instance_->num_arms;
    const std::uint32_t M = instance_->num_clients;
    ++n_;
    const double alpha_l = local_radius(n_, K, M, config_.delta, config_.sigma);

    for (std::uint32_t m = 0; m < M; ++m) {
      std::set<std::uint32_t> selected = local_[m];
      selected.insert(global_.begin(), global_.end());

      if (selected.size() > 1) {
        for (std::uint32_t k : selected) {
          const double reward = draw_reward(*instance_, streams_, k, m);
          sums_[{k, m}] += reward;
          counts_[{k, m}] += 1;
          total_pulls_ += 1;
        }
      }

      if (local_[m].size() > 1) {
        double leader = -1e300;
        for (std::uint32_t k : local_[m]) leader = std::max(leader, mean(k, m));
        std::set<std::uint32_t> survivors;
        for (std::uint32_t k : local_[m]) {
          if (!(leader - mean(k, m) >= 2.0 * alpha_l)) survivors.insert(k);
        }
        local_[m] = survivors;
      }

      if (local_[m].size() == 1) {
        local_declared_[m] = *local_[m].begin();
        local_[m].clear();
      }
    }

    if (global_.size() > 1 && naive_is_comm_step(config_.schedule, n_)) {
      comm_cost_ += config_.uplink_cost * static_cast<double>(M) *
                    static_cast<double>(global_.size());
      comm_rounds_ += 1;
      // Arms in the global set must have been pulled at every step so far.
      for (std::uint32_t k : global_) {
        for (std::uint32_t m = 0; m < M; ++m) {
          if (counts_[{k, m}] != n_) sample_sync_ok_ = false;
        }
      }

      const double alpha_g = global_radius(n_, K, M, config_.delta, config_.sigma);
      std::map<std::uint32_t, double> aggregated;
      double leader = -1e300;
      for (std::uint32_t k : global_) {
        double sum = 0.0;
        for (std::uint32_t m = 0; m < M; ++m) sum += mean(k, m);
        aggregated[k] = sum / static_cast<double>(M);
        leader = std::max(leader, aggregated[k]);
      }
      std::set<std::uint32_t> survivors;
      for (std::uint32_t k : global_) {
        if (!(leader - aggregated[k] >= 2.0 * alpha_g)) survivors.insert(k);
      }
      global_ = survivors;
    }

    if (global_.size() == 1) {
      global_declared_ = *global_.begin();
      global_.clear();
    }
  }

  double mean(std::uint32_t k, std::uint32_t m) {
    return sums_[{k, m}] / static_cast<double>(counts_[{k, m}]);
  }

  std::uint64_t step_count() const { return n_; }
  const std::vector<std::set<std::uint32_t>>& local_active() const { return local_; }
  const std::set<std::uint32_t>& global_active() const { return global_; }
  const std::vector<std::optional<std::uint32_t>>& local_declared() const { return local_declared_; }
  std::optional<std::uint32_t> global_declared() const { return global_declared_; }
  std::uint64_t total_pulls() const { return total_pulls_; }
  double comm_cost() const { return comm_cost_; }
  std::uint64_t comm_rounds() const { return comm_rounds_; }
  bool sample_sync_ok() const { return sample_sync_ok_; }
  std::uint64_t count(std::uint32_t k, std::uint32_t m) { return counts_[{k, m}]; }

 private:
  const ProblemInstance* instance_;
  RunConfig config_;
  RewardStream streams_;
  std::uint64_t n_ = 0;
  std::vector<std::set<std::uint32_t>> local_;
  std::set<std::uint32_t> global_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> sums_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> counts_;
  std::vector<std::optional<std::uint32_t>> local_declared_;
  std::optional<std::uint32_t> global_declared_;
  std::uint64_t total_pulls_ = 0;
  double comm_cost_ = 0.0;
  std::uint64_t comm_rounds_ = 0;
  bool sample_sync_ok_ = true;
};

} // namespace fedelim::testing
