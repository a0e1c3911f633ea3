#include "fedelim/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace fedelim {

namespace {

using Rational = boost::multiprecision::cpp_rational;
using json = nlohmann::json;

bool half_integral(double value, long long& halves) {
  const double twice = 2.0 * value;
  const double rounded = std::nearbyint(twice);
  if (!std::isfinite(twice) || std::fabs(twice - rounded) > 1e-9 || std::fabs(rounded) > 9e15) {
    return false;
  }
  halves = static_cast<long long>(rounded);
  return true;
}

// Sum/count pair per (client, arm) cell; exact when all ratings sit on the
// half-point grid.
struct CellStats {
  long long sum_halves = 0;
  double sum_double = 0.0;
  std::uint64_t count = 0;
};

struct MeanView {
  bool rational = false;
  const CellStats* stats = nullptr;

  Rational exact() const { return Rational(stats->sum_halves) / Rational(2 * stats->count); }
  double approx() const { return stats->sum_double / static_cast<double>(stats->count); }
};

int compare_means(const MeanView& a, const MeanView& b) {
  if (a.rational && b.rational) {
    const Rational ra = a.exact();
    const Rational rb = b.exact();
    return ra < rb ? -1 : (ra == rb ? 0 : 1);
  }
  const double da = a.approx();
  const double db = b.approx();
  return da < db ? -1 : (da == db ? 0 : 1);
}

// Tab-separated table with one header line; columns located by name.
struct TsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

TsvTable read_tsv(std::istream& in, const char* what, std::vector<std::string>& errors) {
  TsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    errors.push_back(std::string(what) + ": missing header line");
    return table;
  }
  for (auto field : detail::split(detail::trim(line), '\t')) {
    table.columns.emplace_back(field);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    std::vector<std::string> row;
    for (auto field : detail::split(trimmed, '\t')) row.emplace_back(field);
    if (row.size() < table.columns.size()) {
      errors.push_back(std::string(what) + ": line " + std::to_string(line_no) +
                       ": expected " + std::to_string(table.columns.size()) + " fields");
      continue;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

} // namespace

RatingsParseReport parse_ratings_csv(std::istream& in) {
  RatingsParseReport report;
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "client,arm,rating") {
    report.errors.push_back("line 1: missing header \"client,arm,rating\"");
    return report;
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split(trimmed, ',');
    if (fields.size() != 3) {
      report.errors.push_back("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                              std::to_string(fields.size()));
      continue;
    }
    RatingsRow row;
    row.client = std::string(detail::trim(fields[0]));
    row.arm = std::string(detail::trim(fields[1]));
    if (row.client.empty() || row.arm.empty()) {
      report.errors.push_back("line " + std::to_string(line_no) + ": empty label");
      continue;
    }
    if (!detail::parse_double(detail::trim(fields[2]), row.rating) || !std::isfinite(row.rating)) {
      report.errors.push_back("line " + std::to_string(line_no) + ": non-numeric rating");
      continue;
    }
    report.table.rows.push_back(std::move(row));
  }
  return report;
}

JoinReport join_hetrec(std::istream& ratings, std::istream& countries, std::istream& genres) {
  JoinReport report;
  const TsvTable ratings_table = read_tsv(ratings, "ratings", report.errors);
  const TsvTable countries_table = read_tsv(countries, "countries", report.errors);
  const TsvTable genres_table = read_tsv(genres, "genres", report.errors);

  const int rating_user = ratings_table.column("userID");
  const int rating_movie = ratings_table.column("movieID");
  const int rating_value = ratings_table.column("rating");
  const int country_movie = countries_table.column("movieID");
  const int country_name = countries_table.column("country");
  const int genre_movie = genres_table.column("movieID");
  const int genre_name = genres_table.column("genre");
  if (rating_user < 0 || rating_movie < 0 || rating_value < 0) {
    report.errors.push_back("ratings: need columns userID, movieID, rating");
    return report;
  }
  if (country_movie < 0 || country_name < 0) {
    report.errors.push_back("countries: need columns movieID, country");
    return report;
  }
  if (genre_movie < 0 || genre_name < 0) {
    report.errors.push_back("genres: need columns movieID, genre");
    return report;
  }

  std::map<std::string, std::string> country_of;
  for (const auto& row : countries_table.rows) {
    if (!row[country_name].empty()) country_of.emplace(row[country_movie], row[country_name]);
  }
  std::map<std::string, std::vector<std::string>> genres_of;
  for (const auto& row : genres_table.rows) {
    if (!row[genre_name].empty()) genres_of[row[genre_movie]].push_back(row[genre_name]);
  }

  for (const auto& row : ratings_table.rows) {
    double value = 0.0;
    if (!detail::parse_double(row[rating_value], value) || !std::isfinite(value)) {
      report.errors.push_back("ratings: non-numeric rating for movieID " + row[rating_movie]);
      continue;
    }
    const auto country = country_of.find(row[rating_movie]);
    const auto genre_list = genres_of.find(row[rating_movie]);
    if (country == country_of.end() || genre_list == genres_of.end() ||
        genre_list->second.empty()) {
      report.dropped_rows += 1;
      continue;
    }
    for (const auto& genre : genre_list->second) {
      report.table.rows.push_back({country->second, genre, value});
    }
  }
  return report;
}

JoinReport join_hetrec(const HetrecFiles& files) {
  std::ifstream ratings(files.ratings_path);
  if (!ratings) throw std::runtime_error("cannot open ratings file: " + files.ratings_path);
  std::ifstream countries(files.countries_path);
  if (!countries) throw std::runtime_error("cannot open countries file: " + files.countries_path);
  std::ifstream genres(files.genres_path);
  if (!genres) throw std::runtime_error("cannot open genres file: " + files.genres_path);
  return join_hetrec(ratings, countries, genres);
}

CleanReport clean(const RatingsTable& table) {
  CleanReport report;

  std::set<std::string> arm_labels;
  for (const auto& row : table.rows) arm_labels.insert(row.arm);

  bool rational = true;
  std::map<std::string, std::map<std::string, CellStats>> per_client;
  for (const auto& row : table.rows) {
    CellStats& cell = per_client[row.client][row.arm];
    long long halves = 0;
    if (half_integral(row.rating, halves)) {
      cell.sum_halves += halves;
    } else {
      rational = false;
    }
    cell.sum_double += row.rating;
    cell.count += 1;
  }
  if (!rational && !table.rows.empty()) {
    report.warnings.push_back(
        "ratings off the half-point grid; tie detection uses exact double comparison");
  }

  std::set<std::string> removed;
  for (const auto& [client, arms] : per_client) {
    bool full_coverage = arms.size() == arm_labels.size();
    if (!full_coverage) {
      removed.insert(client);
      report.warnings.push_back("client " + client + " removed: missing ratings for some arms");
      continue;
    }
    // exact tie scan over the maximal mean
    const CellStats* best = nullptr;
    bool tied = false;
    for (const auto& [arm, cell] : arms) {
      if (best == nullptr) {
        best = &cell;
        continue;
      }
      const int cmp = compare_means({rational, &cell}, {rational, best});
      if (cmp > 0) {
        best = &cell;
        tied = false;
      } else if (cmp == 0) {
        tied = true;
      }
    }
    if (tied) {
      removed.insert(client);
      report.warnings.push_back("client " + client + " removed: multiple local best arms");
    }
  }

  for (const auto& row : table.rows) {
    if (!removed.contains(row.client)) report.table.rows.push_back(row);
  }
  report.removed_clients.assign(removed.begin(), removed.end());
  return report;
}

EmpiricalInstance to_empirical_instance(const RatingsTable& table) {
  if (table.rows.empty()) throw std::runtime_error("empty ratings table");

  std::set<std::string> arm_set, client_set;
  for (const auto& row : table.rows) {
    arm_set.insert(row.arm);
    client_set.insert(row.client);
  }

  EmpiricalInstance empirical;
  empirical.arm_labels.assign(arm_set.begin(), arm_set.end());
  empirical.client_labels.assign(client_set.begin(), client_set.end());

  const auto K = static_cast<std::uint32_t>(empirical.arm_labels.size());
  const auto M = static_cast<std::uint32_t>(empirical.client_labels.size());
  std::map<std::string, std::uint32_t> arm_index, client_index;
  for (std::uint32_t k = 0; k < K; ++k) arm_index[empirical.arm_labels[k]] = k;
  for (std::uint32_t m = 0; m < M; ++m) client_index[empirical.client_labels[m]] = m;

  ProblemInstance& instance = empirical.instance;
  instance.num_arms = K;
  instance.num_clients = M;
  instance.kind = RewardKind::EmpiricalPool;
  instance.pools.assign(static_cast<std::size_t>(K) * M, {});
  for (const auto& row : table.rows) {
    instance.pools[static_cast<std::size_t>(arm_index[row.arm]) * M + client_index[row.client]]
        .push_back(row.rating);
  }

  instance.means.resize(static_cast<std::size_t>(K) * M);
  for (std::size_t i = 0; i < instance.pools.size(); ++i) {
    const auto& pool = instance.pools[i];
    if (pool.empty()) {
      throw std::runtime_error("missing (client, arm) cell after cleanup: arm " +
                               empirical.arm_labels[i / M] + ", client " +
                               empirical.client_labels[i % M]);
    }
    double sum = 0.0;
    for (double v : pool) sum += v;
    instance.means[i] = sum / static_cast<double>(pool.size());
  }

  // Global-best uniqueness checked on exact rational pool means when the
  // ratings allow it; name the tied arms on rejection.
  {
    bool rational = true;
    std::vector<Rational> sums(K, 0);
    std::vector<double> approx(K, 0.0);
    for (std::uint32_t k = 0; k < K && rational; ++k) {
      for (std::uint32_t m = 0; m < M; ++m) {
        const auto& pool = instance.pool(k, m);
        long long total_halves = 0;
        for (double v : pool) {
          long long halves = 0;
          if (!half_integral(v, halves)) {
            rational = false;
            break;
          }
          total_halves += halves;
        }
        if (!rational) break;
        sums[k] += Rational(total_halves) / Rational(2 * pool.size());
      }
    }
    for (std::uint32_t k = 0; k < K; ++k) {
      for (std::uint32_t m = 0; m < M; ++m) approx[k] += instance.mean(k, m);
    }
    std::uint32_t best = 0;
    std::vector<std::uint32_t> tied;
    for (std::uint32_t k = 1; k < K; ++k) {
      const int cmp = rational ? (sums[k] < sums[best] ? -1 : (sums[k] == sums[best] ? 0 : 1))
                               : (approx[k] < approx[best] ? -1 : (approx[k] == approx[best] ? 0 : 1));
      if (cmp > 0) {
        best = k;
        tied.clear();
      } else if (cmp == 0) {
        if (tied.empty()) tied.push_back(best);
        tied.push_back(k);
      }
    }
    if (!tied.empty()) {
      std::string names;
      for (std::uint32_t k : tied) {
        if (!names.empty()) names += ", ";
        names += empirical.arm_labels[k];
      }
      throw std::runtime_error("global best arm not unique; tied arms: " + names);
    }
  }

  const ValidationReport validation = validate(instance);
  if (!validation.ok()) {
    std::string message = "ingested instance fails validation:";
    for (const auto& violation : validation.violations) message += " " + violation + ";";
    throw std::runtime_error(message);
  }
  return empirical;
}

std::string instance_summary_json(const EmpiricalInstance& empirical, const CleanReport* cleanup,
                                  const JoinReport* join) {
  const ProblemInstance& instance = empirical.instance;
  json j;
  j["num_arms"] = instance.num_arms;
  j["num_clients"] = instance.num_clients;
  j["kind"] = std::string(to_string(instance.kind));
  j["arm_labels"] = empirical.arm_labels;
  j["client_labels"] = empirical.client_labels;
  json means = json::array();
  json pool_sizes = json::array();
  for (std::uint32_t k = 0; k < instance.num_arms; ++k) {
    json mean_row = json::array();
    json size_row = json::array();
    for (std::uint32_t m = 0; m < instance.num_clients; ++m) {
      mean_row.push_back(instance.mean(k, m));
      size_row.push_back(instance.pool(k, m).size());
    }
    means.push_back(mean_row);
    pool_sizes.push_back(size_row);
  }
  j["means"] = means;
  j["pool_sizes"] = pool_sizes;
  if (cleanup != nullptr) {
    j["removed_clients"] = cleanup->removed_clients;
    j["clean_warnings"] = cleanup->warnings;
  }
  if (join != nullptr) {
    j["join_dropped_rows"] = join->dropped_rows;
    j["join_errors"] = join->errors;
  }
  return j.dump(2);
}

void write_ratings_csv(const RatingsTable& table, std::ostream& out) {
  out << "client,arm,rating\n";
  for (const auto& row : table.rows) {
    out << row.client << ',' << row.arm << ',' << detail::format_double(row.rating) << '\n';
  }
}

} // namespace fedelim
