#include "fedelim/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "text_util.hpp"

namespace fedelim {

double local_radius(std::uint64_t n, std::uint32_t num_arms, std::uint32_t num_clients,
                    double delta, double sigma) {
  const double nn = static_cast<double>(n);
  return sigma * std::sqrt(2.0 * std::log(8.0 * num_arms * num_clients * nn * nn / delta) / nn);
}

double global_radius(std::uint64_t n, std::uint32_t num_arms, std::uint32_t num_clients,
                     double delta, double sigma) {
  const double nn = static_cast<double>(n);
  return sigma *
         std::sqrt(2.0 * std::log(8.0 * num_arms * nn * nn / delta) / (num_clients * nn));
}

std::string_view to_string(TraceEventType type) {
  switch (type) {
    case TraceEventType::Pull: return "pull";
    case TraceEventType::LocalElim: return "local_elim";
    case TraceEventType::GlobalElim: return "global_elim";
    case TraceEventType::CommRound: return "comm_round";
    case TraceEventType::DeclareLocal: return "declare_local";
    case TraceEventType::DeclareGlobal: return "declare_global";
  }
  return "?";
}

bool RunResult::complete() const {
  if (!global_declaration) return false;
  for (const auto& d : local_declarations) {
    if (!d) return false;
  }
  return true;
}

EliminationEngine::EliminationEngine(const ProblemInstance& instance, const RunConfig& config)
    : instance_(&instance),
      config_(config),
      streams_(config.seed, config.trial, instance.num_arms, instance.num_clients) {
  if (!(config.delta > 0.0 && config.delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0,1)");
  }
  if (config.uplink_cost < 0.0) throw std::invalid_argument("uplink cost must be >= 0");
  if (!(config.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (config.max_steps == 0) throw std::invalid_argument("max_steps must be >= 1");
  if (instance.num_arms < 2 || instance.num_clients < 1 ||
      instance.means.size() !=
          static_cast<std::size_t>(instance.num_arms) * instance.num_clients) {
    throw std::invalid_argument("engine needs a well-formed instance with K >= 2");
  }

  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;
  state_.local_active.assign(M, {});
  for (std::uint32_t m = 0; m < M; ++m) {
    state_.local_active[m].resize(K);
    for (std::uint32_t k = 0; k < K; ++k) state_.local_active[m][k] = k;
  }
  state_.global_active.resize(K);
  for (std::uint32_t k = 0; k < K; ++k) state_.global_active[k] = k;
  state_.reward_sums.assign(static_cast<std::size_t>(K) * M, 0.0);
  state_.pull_counts.assign(static_cast<std::size_t>(K) * M, 0);
  state_.local_declared.assign(M, std::nullopt);

  true_global_means_.resize(K);
  for (std::uint32_t k = 0; k < K; ++k) {
    double sum = 0.0;
    for (std::uint32_t m = 0; m < M; ++m) sum += instance.mean(k, m);
    true_global_means_[k] = sum / static_cast<double>(M);
  }

  trace_.level = config.trace_level;
  trace_.num_arms = K;
  trace_.num_clients = M;
  trace_.delta = config.delta;
  trace_.sigma = config.sigma;
  if (config.trace_level == TraceLevel::Full) {
    trace_.samples.assign(static_cast<std::size_t>(K) * M, {});
  }
  scratch_union_.reserve(K);
}

bool EliminationEngine::all_done() const {
  if (!state_.global_active.empty()) return false;
  for (const auto& set : state_.local_active) {
    if (!set.empty()) return false;
  }
  return true;
}

bool EliminationEngine::terminated() const { return all_done(); }

void EliminationEngine::pull(std::uint32_t k, std::uint32_t m) {
  const double reward = draw_reward(*instance_, streams_, k, m);
  const std::size_t i = static_cast<std::size_t>(k) * instance_->num_clients + m;
  state_.reward_sums[i] += reward;
  state_.pull_counts[i] += 1;
  state_.total_pulls += 1;
  if (trace_.level != TraceLevel::None) {
    if (trace_.level == TraceLevel::Full) trace_.samples[i].push_back(reward);
    trace_.events.push_back({state_.step, TraceEventType::Pull, m, k, reward});
  }
}

bool EliminationEngine::step() {
  if (all_done()) return false;

  const std::uint32_t K = instance_->num_arms;
  const std::uint32_t M = instance_->num_clients;
  const std::uint64_t n = ++state_.step;
  const double alpha_l = local_radius(n, K, M, config_.delta, config_.sigma);
  if (trace_.level == TraceLevel::Full) {
    trace_.radii.emplace_back(alpha_l, global_radius(n, K, M, config_.delta, config_.sigma));
  }

  for (std::uint32_t m = 0; m < M; ++m) {
    auto& local = state_.local_active[m];

    // S_m = S_l,m U S_g (both sorted ascending)
    scratch_union_.clear();
    std::set_union(local.begin(), local.end(), state_.global_active.begin(),
                   state_.global_active.end(), std::back_inserter(scratch_union_));

    if (scratch_union_.size() > 1) {
      for (std::uint32_t k : scratch_union_) pull(k, m);
      if (state_.event_e_ok) {
        // Every arm pulled at step n has exactly n samples, so one local
        // radius covers all of this step's band checks.
        for (std::uint32_t k : scratch_union_) {
          const double deviation = state_.empirical_mean(k, m, M) - instance_->mean(k, m);
          if (std::fabs(deviation) > alpha_l) state_.event_e_ok = false;
        }
      }
    }

    if (local.size() > 1) {
      double leader = state_.empirical_mean(local[0], m, M);
      for (std::size_t i = 1; i < local.size(); ++i) {
        leader = std::max(leader, state_.empirical_mean(local[i], m, M));
      }
      const double threshold = 2.0 * alpha_l;
      std::erase_if(local, [&](std::uint32_t k) {
        const double mean = state_.empirical_mean(k, m, M);
        if (leader - mean >= threshold) {
          if (trace_.level != TraceLevel::None) {
            trace_.events.push_back({n, TraceEventType::LocalElim, m, k, mean});
          }
          return true;
        }
        return false;
      });
    }

    if (local.size() == 1) {
      state_.local_declared[m] = local[0];
      if (trace_.level != TraceLevel::None) {
        trace_.events.push_back({n, TraceEventType::DeclareLocal, m, local[0],
                                 state_.empirical_mean(local[0], m, M)});
      }
      local.clear();
    }
  }

  auto& global = state_.global_active;
  if (global.size() > 1 && is_comm_step(config_.schedule, n)) {
    const auto sg_size = static_cast<std::uint32_t>(global.size());
    state_.comm_cost += config_.uplink_cost * static_cast<double>(M) * sg_size;
    state_.comm_log.emplace_back(n, sg_size);
    if (trace_.level != TraceLevel::None) {
      trace_.comm_rounds.push_back({n, global});
      trace_.events.push_back(
          {n, TraceEventType::CommRound, 0, 0, static_cast<double>(sg_size)});
    }

    const double alpha_g = global_radius(n, K, M, config_.delta, config_.sigma);
    std::vector<double> aggregated(global.size());
    double leader = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < global.size(); ++i) {
      double sum = 0.0;
      for (std::uint32_t m = 0; m < M; ++m) {
        sum += state_.empirical_mean(global[i], m, M);
      }
      aggregated[i] = sum / static_cast<double>(M);
      leader = std::max(leader, aggregated[i]);
      if (state_.event_e_ok &&
          std::fabs(aggregated[i] - true_global_means_[global[i]]) > alpha_g) {
        state_.event_e_ok = false;
      }
    }

    const double threshold = 2.0 * alpha_g;
    std::vector<std::uint32_t> survivors;
    survivors.reserve(global.size());
    for (std::size_t i = 0; i < global.size(); ++i) {
      if (leader - aggregated[i] >= threshold) {
        if (trace_.level != TraceLevel::None) {
          trace_.events.push_back({n, TraceEventType::GlobalElim, 0, global[i], aggregated[i]});
        }
      } else {
        survivors.push_back(global[i]);
      }
    }
    global = std::move(survivors);
  }

  if (global.size() == 1) {
    state_.global_declared = global[0];
    if (trace_.level != TraceLevel::None) {
      trace_.events.push_back({n, TraceEventType::DeclareGlobal, 0, global[0], 0.0});
    }
    global.clear();
  }

  return true;
}

RunResult EliminationEngine::result() const {
  RunResult result;
  result.local_declarations = state_.local_declared;
  result.global_declaration = state_.global_declared;
  result.stop_step = state_.step;
  result.total_pulls = state_.total_pulls;
  result.pull_counts = state_.pull_counts;
  result.comm_cost = state_.comm_cost;
  result.comm_round_count = state_.comm_log.size();
  result.total_cost = static_cast<double>(state_.total_pulls) + state_.comm_cost;
  result.event_e_holds = state_.event_e_ok;
  result.hit_max_steps = !all_done();
  result.comm_log = state_.comm_log;
  return result;
}

RunResult run(const ProblemInstance& instance, const RunConfig& config) {
  EliminationEngine engine(instance, config);
  while (!engine.terminated() && engine.state().step < config.max_steps) {
    engine.step();
  }
  return engine.result();
}

bool event_e_holds(const Trace& trace, const ProblemInstance& instance) {
  if (trace.level != TraceLevel::Full) {
    throw std::invalid_argument("event-E evaluation needs a Full-level trace");
  }
  const std::uint32_t K = trace.num_arms;
  const std::uint32_t M = trace.num_clients;

  // (a) every prefix mean of every sample sequence inside the local band
  std::vector<std::vector<double>> prefix_means(trace.samples.size());
  for (std::uint32_t k = 0; k < K; ++k) {
    for (std::uint32_t m = 0; m < M; ++m) {
      const std::size_t i = static_cast<std::size_t>(k) * M + m;
      const auto& samples = trace.samples[i];
      prefix_means[i].reserve(samples.size());
      double sum = 0.0;
      for (std::size_t s = 0; s < samples.size(); ++s) {
        sum += samples[s];
        const double mean = sum / static_cast<double>(s + 1);
        prefix_means[i].push_back(mean);
        const double band = local_radius(s + 1, K, M, trace.delta, trace.sigma);
        if (std::fabs(mean - instance.mean(k, m)) > band) return false;
      }
    }
  }

  // (b) every server-side aggregate inside the global band at the step it
  // was formed; arms in S_g have exactly `step` samples at every client
  for (const auto& round : trace.comm_rounds) {
    const double band = global_radius(round.step, K, M, trace.delta, trace.sigma);
    for (std::uint32_t k : round.active_arms) {
      double sum = 0.0;
      double truth = 0.0;
      for (std::uint32_t m = 0; m < M; ++m) {
        const std::size_t i = static_cast<std::size_t>(k) * M + m;
        if (prefix_means[i].size() < round.step) {
          throw std::invalid_argument("trace samples do not cover communication round");
        }
        sum += prefix_means[i][round.step - 1];
        truth += instance.mean(k, m);
      }
      if (std::fabs(sum / M - truth / M) > band) return false;
    }
  }
  return true;
}

CostBreakdown cost_of(const RunResult& result) {
  return CostBreakdown{result.total_pulls, result.comm_cost, result.total_cost};
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "n,event_type,client,arm,value\n";
  for (const auto& event : trace.events) {
    const bool server_side = event.type == TraceEventType::CommRound ||
                             event.type == TraceEventType::GlobalElim ||
                             event.type == TraceEventType::DeclareGlobal;
    const std::uint32_t client = server_side ? 0 : event.client + 1;
    const std::uint32_t arm = event.type == TraceEventType::CommRound ? 0 : event.arm + 1;
    out << event.step << ',' << to_string(event.type) << ',' << client << ',' << arm << ','
        << detail::format_double(event.value) << '\n';
  }
}

} // namespace fedelim
