#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fedelim/instance.hpp"
#include "fedelim/random.hpp"

using namespace fedelim;

namespace {

ProblemInstance eq17() { return *builtin_instance("eq17"); }

ProblemInstance two_by_two(std::vector<double> means, RewardKind kind) {
  ProblemInstance instance;
  instance.num_arms = 2;
  instance.num_clients = 2;
  instance.kind = kind;
  instance.means = std::move(means);
  return instance;
}

} // namespace

TEST_CASE("validate accepts the built-in instances") {
  CHECK(validate(eq17()).ok());
  CHECK(validate(*builtin_instance("bernoulli-eq36")).ok());
  CHECK(builtin_instance("nope") == std::nullopt);
}

TEST_CASE("validate flags exact local ties") {
  // mu_{1,1} == mu_{2,1}
  const auto instance = two_by_two({0.4, 0.1, 0.4, 0.9}, RewardKind::GaussianUnitVariance);
  const auto report = validate(instance);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations.front() == "local best of client 1 not unique");
}

TEST_CASE("validate flags Bernoulli means outside [0,1]") {
  const auto instance = two_by_two({1.2, 0.1, 0.4, 0.9}, RewardKind::Bernoulli);
  const auto report = validate(instance);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations.front() == "Bernoulli mean out of [0,1] at arm 1 client 1");
}

TEST_CASE("validate flags non-unique global best") {
  // columns unique locally; row averages tie between arms 1 and 2
  const auto instance = two_by_two({0.8, 0.2, 0.2, 0.8}, RewardKind::GaussianUnitVariance);
  const auto report = validate(instance);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations.front() == "global best arm not unique");
}

TEST_CASE("validate warns on single-client instances") {
  ProblemInstance instance;
  instance.num_arms = 2;
  instance.num_clients = 1;
  instance.means = {0.2, 0.7};
  const auto report = validate(instance);
  CHECK(report.ok());
  REQUIRE(report.warnings.size() == 1);
}

TEST_CASE("best arms of the built-in instances") {
  const auto profile = compute_best_arms(eq17());
  CHECK(profile.local_best == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(profile.global_best == 3);
  CHECK(profile.global_means[3] == doctest::Approx(0.5));
  CHECK(profile.global_means[0] == doctest::Approx(1.1 / 3.0));

  const auto bern = compute_best_arms(*builtin_instance("bernoulli-eq36"));
  CHECK(bern.local_best == std::vector<std::uint32_t>{0, 0, 0});
  CHECK(bern.global_best == 0);
}

TEST_CASE("single client: global equals local") {
  ProblemInstance instance;
  instance.num_arms = 2;
  instance.num_clients = 1;
  instance.means = {0.2, 0.7};
  const auto profile = compute_best_arms(instance);
  CHECK(profile.local_best == std::vector<std::uint32_t>{1});
  CHECK(profile.global_best == 1);
}

TEST_CASE("compute_best_arms rejects ties") {
  const auto instance = two_by_two({0.4, 0.1, 0.4, 0.9}, RewardKind::GaussianUnitVariance);
  CHECK_THROWS_AS(compute_best_arms(instance), std::invalid_argument);
}

TEST_CASE("gap structure of eq17") {
  const auto gaps = compute_gaps(eq17());
  // client 1: best arm 1 at 0.9; rivals at 0.1, 0.1, 0.5
  CHECK(gaps.local_gap(1, 0) == doctest::Approx(0.8));
  CHECK(gaps.local_gap(2, 0) == doctest::Approx(0.8));
  CHECK(gaps.local_gap(3, 0) == doctest::Approx(0.4));
  CHECK(gaps.local_gap(0, 0) == doctest::Approx(0.4)); // best arm: min rival gap
  for (std::uint32_t k = 0; k < 4; ++k) {
    CHECK(gaps.global_gap(k) == doctest::Approx(0.5 - 1.1 / 3.0));
  }
}

TEST_CASE("two-arm symmetric gaps") {
  ProblemInstance instance;
  instance.num_arms = 2;
  instance.num_clients = 1;
  instance.means = {0.0, 1.0};
  const auto gaps = compute_gaps(instance);
  CHECK(gaps.local_gap(0, 0) == doctest::Approx(1.0));
  CHECK(gaps.local_gap(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("gaps are strictly positive on random valid instances") {
  Xoshiro256pp rng(7);
  for (int round = 0; round < 50; ++round) {
    ProblemInstance instance;
    instance.num_arms = 3;
    instance.num_clients = 2;
    for (int i = 0; i < 6; ++i) {
      instance.means.push_back(static_cast<double>(rng.next_below(20)) * 0.05);
    }
    if (!validate(instance).ok()) continue;
    const auto gaps = compute_gaps(instance);
    for (double gap : gaps.local_gaps) CHECK(gap > 0.0);
    for (double gap : gaps.global_gaps) CHECK(gap > 0.0);
    const auto profile = compute_best_arms(instance);
    for (std::uint32_t k = 0; k < instance.num_arms; ++k) {
      CHECK(profile.global_means[profile.global_best] >=
            profile.global_means[k]);
    }
  }
}

TEST_CASE("empirical pool ties are detected through exact rational means") {
  ProblemInstance instance;
  instance.num_arms = 2;
  instance.num_clients = 1;
  instance.kind = RewardKind::EmpiricalPool;
  // both arms average exactly 2, via different pool shapes
  instance.pools = {{2.0}, {4.0, 2.0, 0.0}};
  instance.means = {2.0, 2.0};
  const auto report = validate(instance);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations.front() == "local best of client 1 not unique");
}

TEST_CASE("empirical pool validation checks stored means and empty pools") {
  ProblemInstance instance;
  instance.num_arms = 2;
  instance.num_clients = 1;
  instance.kind = RewardKind::EmpiricalPool;
  instance.pools = {{1.0, 2.0}, {}};
  instance.means = {1.5, 0.0};
  const auto report = validate(instance);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations.front() == "empty pool at arm 2 client 1");
}

TEST_CASE("reward draws follow the reward kind") {
  ProblemInstance instance;
  instance.num_arms = 2;
  instance.num_clients = 1;
  instance.kind = RewardKind::EmpiricalPool;
  instance.pools = {{3.5}, {1.0, 2.0}};
  instance.means = {3.5, 1.5};

  RewardStream stream(3, 0, 2, 1);
  for (int i = 0; i < 20; ++i) CHECK(draw_reward(instance, stream, 0, 0) == 3.5);
  for (int i = 0; i < 20; ++i) {
    const double value = draw_reward(instance, stream, 1, 0);
    CHECK((value == 1.0 || value == 2.0));
  }

  ProblemInstance degenerate;
  degenerate.num_arms = 2;
  degenerate.num_clients = 1;
  degenerate.kind = RewardKind::Bernoulli;
  degenerate.means = {1.0, 0.0};
  RewardStream stream2(4, 0, 2, 1);
  for (int i = 0; i < 20; ++i) CHECK(draw_reward(degenerate, stream2, 0, 0) == 1.0);
  for (int i = 0; i < 20; ++i) CHECK(draw_reward(degenerate, stream2, 1, 0) == 0.0);
}

TEST_CASE("gaussian draws concentrate around the mean") {
  ProblemInstance instance;
  instance.num_arms = 2;
  instance.num_clients = 1;
  instance.means = {0.0, 1.0};
  RewardStream stream(99, 0, 2, 1);
  double sum = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += draw_reward(instance, stream, 0, 0);
  CHECK(std::fabs(sum / n) < 0.01); // 3 sigma would be 0.003
}

TEST_CASE("equal stream keys replay identical sequences") {
  RewardStream a(42, 7, 3, 2);
  RewardStream b(42, 7, 3, 2);
  ProblemInstance instance = eq17();
  for (int i = 0; i < 100; ++i) {
    const std::uint32_t k = static_cast<std::uint32_t>(i % 3);
    const std::uint32_t m = static_cast<std::uint32_t>(i % 2);
    CHECK(draw_reward(instance, a, k, m) == draw_reward(instance, b, k, m));
  }
  // different trial index diverges
  RewardStream c(42, 8, 3, 2);
  bool all_equal = true;
  RewardStream a2(42, 7, 3, 2);
  for (int i = 0; i < 32; ++i) {
    if (draw_reward(instance, a2, 0, 0) != draw_reward(instance, c, 0, 0)) all_equal = false;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("instance text format round-trips") {
  std::stringstream buffer;
  save_instance(eq17(), buffer);
  const ProblemInstance loaded = load_instance(buffer);
  CHECK(loaded.num_arms == 4);
  CHECK(loaded.num_clients == 3);
  CHECK(loaded.kind == RewardKind::GaussianUnitVariance);
  CHECK(loaded.means == eq17().means);
}

TEST_CASE("instance loader reports malformed input") {
  std::stringstream missing_header("");
  CHECK_THROWS(load_instance(missing_header));

  std::stringstream bad_kind("2 1 weird\n0.1\n0.2\n");
  CHECK_THROWS(load_instance(bad_kind));

  std::stringstream empirical("2 1 empirical\n0.1\n0.2\n");
  CHECK_THROWS(load_instance(empirical));

  std::stringstream short_row("2 2 gaussian\n0.1 0.2\n0.3\n");
  CHECK_THROWS(load_instance(short_row));

  std::stringstream bad_number("2 1 gaussian\n0.1\nabc\n");
  CHECK_THROWS(load_instance(bad_number));
}
