#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fedelim/ingest.hpp"
#include "fedelim/instance.hpp"

using namespace fedelim;

namespace {

const char* kFixtureDir = FEDELIM_TEST_DATA_DIR "/hetrec_fixture";

HetrecFiles fixture_files() {
  return {std::string(kFixtureDir) + "/ratings.tsv", std::string(kFixtureDir) + "/countries.tsv",
          std::string(kFixtureDir) + "/genres.tsv"};
}

RatingsTable rows(std::initializer_list<RatingsRow> list) {
  RatingsTable table;
  table.rows = list;
  return table;
}

} // namespace

TEST_CASE("ratings CSV parses row by row with positioned errors") {
  std::stringstream good("client,arm,rating\nA,x,4.0\nB,y,0.5\nC,z,5.0\n");
  const auto parsed = parse_ratings_csv(good);
  CHECK(parsed.errors.empty());
  REQUIRE(parsed.table.rows.size() == 3);
  CHECK(parsed.table.rows[0].client == "A");
  CHECK(parsed.table.rows[1].rating == 0.5);

  std::stringstream bad_rating(
      "client,arm,rating\nA,x,1\nA,y,2\nB,x,3\nB,y,4\nC,x,5\nC,y,abc\n");
  const auto bad = parse_ratings_csv(bad_rating);
  REQUIRE(bad.errors.size() == 1);
  CHECK(bad.errors.front() == "line 7: non-numeric rating");
  CHECK(bad.table.rows.size() == 5); // the parseable rows survive

  std::stringstream header_only("client,arm,rating\n");
  const auto empty = parse_ratings_csv(header_only);
  CHECK(empty.errors.empty());
  CHECK(empty.table.rows.empty());

  std::stringstream no_header("A,x,4.0\n");
  CHECK_FALSE(parse_ratings_csv(no_header).errors.empty());

  std::stringstream arity("client,arm,rating\nA,x\n");
  const auto wrong = parse_ratings_csv(arity);
  REQUIRE(wrong.errors.size() == 1);
  CHECK(wrong.errors.front() == "line 2: expected 3 fields, got 2");
}

TEST_CASE("hetrec join multiplies ratings by genre membership") {
  const JoinReport join = join_hetrec(fixture_files());
  CHECK(join.errors.empty());

  // brute-force count: per rating, the number of genres of its movie,
  // skipping movies that resolve to no country
  CHECK(join.table.rows.size() == 16);
  CHECK(join.dropped_rows == 1); // m9 has no country entry

  // a movie with two genres turns one rating into two rows
  std::size_t m5_rows = 0;
  for (const auto& row : join.table.rows) {
    if (row.client == "Tieland" && row.rating == 3.5) ++m5_rows;
  }
  CHECK(m5_rows == 2); // u6's single m5 rating lands in Action and Comedy
}

TEST_CASE("clean removes exactly the planted tied client") {
  const JoinReport join = join_hetrec(fixture_files());
  const CleanReport cleaned = clean(join.table);
  CHECK(cleaned.removed_clients == std::vector<std::string>{"Tieland"});
  CHECK(cleaned.table.rows.size() == 11); // 16 minus Tieland's 5 rows

  // idempotent
  const CleanReport again = clean(cleaned.table);
  CHECK(again.removed_clients.empty());
  CHECK(again.table.rows.size() == cleaned.table.rows.size());
}

TEST_CASE("clean detects exact rational ties from sum/count shapes") {
  // arm x: mean 2/1, arm y: mean 4/2; both exactly 2
  const auto table = rows({{"tied", "x", 2.0},
                           {"tied", "y", 3.0},
                           {"tied", "y", 1.0},
                           {"keeper", "x", 2.0},
                           {"keeper", "y", 2.5}});
  const CleanReport cleaned = clean(table);
  CHECK(cleaned.removed_clients == std::vector<std::string>{"tied"});
  CHECK(cleaned.table.rows.size() == 2);
}

TEST_CASE("clean removes clients without full arm coverage") {
  const auto table = rows({{"full", "x", 1.0},
                           {"full", "y", 2.0},
                           {"partial", "x", 3.0}});
  const CleanReport cleaned = clean(table);
  CHECK(cleaned.removed_clients == std::vector<std::string>{"partial"});
}

TEST_CASE("off-grid ratings fall back to exact double comparison") {
  const auto table = rows({{"c", "x", 0.3}, {"c", "y", 0.3}, {"d", "x", 0.3}, {"d", "y", 0.4}});
  const CleanReport cleaned = clean(table);
  CHECK_FALSE(cleaned.warnings.empty());
  CHECK(cleaned.removed_clients == std::vector<std::string>{"c"});
}

TEST_CASE("the fixture pipeline produces a valid empirical instance") {
  const JoinReport join = join_hetrec(fixture_files());
  const CleanReport cleaned = clean(join.table);
  const EmpiricalInstance empirical = to_empirical_instance(cleaned.table);

  CHECK(empirical.arm_labels == std::vector<std::string>{"Action", "Comedy", "Drama"});
  CHECK(empirical.client_labels == std::vector<std::string>{"Avaria", "Borduria"});

  const ProblemInstance& instance = empirical.instance;
  CHECK(instance.num_arms == 3);
  CHECK(instance.num_clients == 2);
  CHECK(instance.mean(0, 0) == 4.5);  // Avaria Action {4, 5}
  CHECK(instance.mean(1, 0) == 2.5);  // Avaria Comedy {3, 2}
  CHECK(instance.mean(2, 0) == 1.75); // Avaria Drama {3, 0.5}
  CHECK(instance.mean(0, 1) == 1.5);  // Borduria Action {2, 1}
  CHECK(instance.mean(1, 1) == 2.0);
  CHECK(instance.mean(2, 1) == 4.0);
  CHECK(instance.pool(0, 0).size() == 2);

  CHECK(validate(instance).ok());
  const BestArmProfile profile = compute_best_arms(instance);
  CHECK(profile.local_best == std::vector<std::uint32_t>{0, 2});
  CHECK(profile.global_best == 0); // Action averages 3.0
}

TEST_CASE("pool means are exact and tie detection sees through them") {
  // pools {1,3}, {2} at one client: both means exactly 2, so the client is
  // removed; the other client's singleton pools pass through untouched
  const auto table = rows({{"c1", "a1", 1.0},
                           {"c1", "a1", 3.0},
                           {"c1", "a2", 2.0},
                           {"c2", "a1", 0.0},
                           {"c2", "a2", 4.0}});
  const CleanReport cleaned = clean(table);
  CHECK(cleaned.removed_clients == std::vector<std::string>{"c1"});

  const EmpiricalInstance empirical = to_empirical_instance(cleaned.table);
  CHECK(empirical.instance.mean(0, 0) == 0.0);
  CHECK(empirical.instance.mean(1, 0) == 4.0);
  CHECK(compute_best_arms(empirical.instance).global_best == 1);
}

TEST_CASE("global ties are rejected with the arms named") {
  const auto table = rows({{"A", "x", 1.0},
                           {"A", "y", 0.0},
                           {"B", "x", 0.0},
                           {"B", "y", 1.0}});
  CHECK_THROWS_WITH_AS(to_empirical_instance(table),
                       "global best arm not unique; tied arms: x, y", std::runtime_error);
}

TEST_CASE("labels are kept verbatim, including 'nan'") {
  std::stringstream csv("client,arm,rating\nnan,x,1\nnan,y,2\nreal,x,3\nreal,y,1\n");
  const auto parsed = parse_ratings_csv(csv);
  REQUIRE(parsed.errors.empty());
  const EmpiricalInstance empirical = to_empirical_instance(parsed.table);
  CHECK(empirical.client_labels == std::vector<std::string>{"nan", "real"});
}

TEST_CASE("ratings tables round-trip through the CSV writer") {
  const auto table = rows({{"A", "x", 4.5}, {"B", "y", 0.5}});
  std::stringstream buffer;
  write_ratings_csv(table, buffer);
  const auto parsed = parse_ratings_csv(buffer);
  CHECK(parsed.errors.empty());
  REQUIRE(parsed.table.rows.size() == 2);
  CHECK(parsed.table.rows[0].client == "A");
  CHECK(parsed.table.rows[0].rating == 4.5);
}

TEST_CASE("instance summary JSON carries labels and cleanup outcomes") {
  const JoinReport join = join_hetrec(fixture_files());
  const CleanReport cleaned = clean(join.table);
  const EmpiricalInstance empirical = to_empirical_instance(cleaned.table);
  const std::string summary = instance_summary_json(empirical, &cleaned, &join);
  CHECK(summary.find("Tieland") != std::string::npos);
  CHECK(summary.find("\"join_dropped_rows\": 1") != std::string::npos);
  CHECK(summary.find("Avaria") != std::string::npos);
}
