#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedelim/instance.hpp"

namespace fedelim {

struct RatingsRow {
  std::string client;
  std::string arm;
  double rating = 0.0;
};

struct RatingsTable {
  std::vector<RatingsRow> rows;
};

/// Result of parsing a "client,arm,rating" CSV. Malformed rows are skipped
/// and reported with their line number; the table holds exactly the
/// parseable rows.
struct RatingsParseReport {
  RatingsTable table;
  std::vector<std::string> errors;
};

RatingsParseReport parse_ratings_csv(std::istream& in);

/// The three-file rating layout: tab-separated, one header line each, with
/// columns located by name (extra columns are ignored).
///   ratings:   userID, movieID, rating
///   countries: movieID, country
///   genres:    movieID, genre
struct HetrecFiles {
  std::string ratings_path;
  std::string countries_path;
  std::string genres_path;
};

/// Joins the three tables on movieID: one output row per (rating x genre of
/// that movie), with client = country and arm = genre. A movie with g genres
/// turns each of its ratings into g rows. Ratings whose movieID lacks a
/// country or any genre are dropped and counted.
struct JoinReport {
  RatingsTable table;
  std::uint64_t dropped_rows = 0;
  std::vector<std::string> errors;
};

JoinReport join_hetrec(std::istream& ratings, std::istream& countries, std::istream& genres);
JoinReport join_hetrec(const HetrecFiles& files);

/// Removes clients that cannot form a valid instance cell-wise: clients
/// missing ratings for one or more arms, and clients whose maximal per-arm
/// mean is attained by two or more arms (means compared as exact rationals
/// when every rating sits on the half-point grid; exact doubles otherwise,
/// with a warning). Idempotent.
struct CleanReport {
  RatingsTable table;
  std::vector<std::string> removed_clients;
  std::vector<std::string> warnings;
};

CleanReport clean(const RatingsTable& table);

/// A problem instance plus the labels behind its indices. Arms and clients
/// are ordered by label (lexicographic), 0-based.
struct EmpiricalInstance {
  ProblemInstance instance;
  std::vector<std::string> client_labels;
  std::vector<std::string> arm_labels;
};

/// Builds the EmpiricalPool instance from a cleaned table. Throws
/// std::runtime_error, naming the tied arms, if the global best arm is not
/// unique after cleanup.
EmpiricalInstance to_empirical_instance(const RatingsTable& table);

/// Summary JSON: labels, K, M, means, pool sizes, plus (optionally) what the
/// cleanup removed and what the join dropped.
std::string instance_summary_json(const EmpiricalInstance& empirical,
                                  const CleanReport* cleanup = nullptr,
                                  const JoinReport* join = nullptr);

/// Writes a table back out in the "client,arm,rating" CSV format.
void write_ratings_csv(const RatingsTable& table, std::ostream& out);

} // namespace fedelim
