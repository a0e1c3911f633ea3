#include <doctest.h>

#include <vector>

#include "fedelim/engine.hpp"
#include "fedelim/instance.hpp"
#include "reference_simulator.hpp"

using namespace fedelim;
using fedelim::testing::ReferenceSimulator;

namespace {

// Random instances on a coarse mean grid so that gaps stay bounded away
// from zero and runs terminate quickly.
ProblemInstance random_instance(std::uint32_t num_arms, std::uint32_t num_clients,
                                std::uint64_t seed) {
  Xoshiro256pp rng(seed);
  while (true) {
    ProblemInstance instance;
    instance.num_arms = num_arms;
    instance.num_clients = num_clients;
    instance.means.resize(static_cast<std::size_t>(num_arms) * num_clients);
    for (double& mean : instance.means) {
      mean = 0.3 * static_cast<double>(rng.next_below(6)); // {0, 0.3, ..., 1.5}
    }
    if (validate(instance).ok()) return instance;
  }
}

// Walks both machines in lockstep and requires identical state after every
// iteration: active sets, declarations, pull counts, and costs.
void check_equivalence(const ProblemInstance& instance, const RunConfig& config) {
  EliminationEngine engine(instance, config);
  ReferenceSimulator reference(instance, config);

  while (!engine.terminated() && engine.state().step < config.max_steps) {
    engine.step();
    reference.step();
    const EngineState& state = engine.state();

    REQUIRE(state.step == reference.step_count());
    for (std::uint32_t m = 0; m < instance.num_clients; ++m) {
      const auto& ref_set = reference.local_active()[m];
      REQUIRE(state.local_active[m].size() == ref_set.size());
      std::size_t i = 0;
      for (std::uint32_t k : ref_set) {
        // monotone shrinkage is implied: members only ever disappear
        REQUIRE(state.local_active[m][i++] == k);
      }
    }
    REQUIRE(state.global_active.size() == reference.global_active().size());
    std::size_t i = 0;
    for (std::uint32_t k : reference.global_active()) {
      REQUIRE(state.global_active[i++] == k);
    }
    REQUIRE(state.total_pulls == reference.total_pulls());
    REQUIRE(state.comm_cost == reference.comm_cost());
  }
  REQUIRE(reference.terminated() == engine.terminated());

  const RunResult result = engine.result();
  REQUIRE(result.local_declarations == reference.local_declared());
  REQUIRE(result.global_declaration == reference.global_declared());
  REQUIRE(result.comm_round_count == reference.comm_rounds());
  for (std::uint32_t k = 0; k < instance.num_arms; ++k) {
    for (std::uint32_t m = 0; m < instance.num_clients; ++m) {
      REQUIRE(result.pull_counts[static_cast<std::size_t>(k) * instance.num_clients + m] ==
              reference.count(k, m));
    }
  }
  REQUIRE(reference.sample_sync_ok());

  // correctness under event E
  if (result.event_e_holds && !result.hit_max_steps) {
    const BestArmProfile truth = compute_best_arms(instance);
    REQUIRE(result.global_declaration == truth.global_best);
    for (std::uint32_t m = 0; m < instance.num_clients; ++m) {
      REQUIRE(result.local_declarations[m] == truth.local_best[m]);
    }
  }
}

} // namespace

TEST_CASE("engine matches the naive reference across instances, seeds and schedules") {
  const Schedule schedules[] = {
      Schedule::every_step(),
      Schedule::exponential(2.0),
      Schedule::periodic(7, 3),
      Schedule::super_exponential(true),
  };
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 13; ++seed) {
    for (const auto& [num_arms, num_clients] :
         std::vector<std::pair<std::uint32_t, std::uint32_t>>{{2, 2}, {3, 3}}) {
      const ProblemInstance instance = random_instance(num_arms, num_clients, seed * 31 + 5);
      for (const Schedule& schedule : schedules) {
        RunConfig config;
        config.delta = 0.05;
        config.uplink_cost = 10.0;
        config.schedule = schedule;
        config.seed = seed;
        config.max_steps = 30000;
        check_equivalence(instance, config);
        ++checked;
      }
    }
  }
  CHECK(checked == 13 * 2 * 4);
}

TEST_CASE("equivalence also holds for Bernoulli rewards") {
  const auto instance = *builtin_instance("bernoulli-eq36");
  RunConfig config;
  config.delta = 0.2;
  config.uplink_cost = 5.0;
  config.schedule = Schedule::exponential(2.0);
  config.max_steps = 3000; // truncated run; equivalence must still hold
  check_equivalence(instance, config);
}
