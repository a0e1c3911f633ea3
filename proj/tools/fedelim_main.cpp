#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedelim/bounds.hpp"
#include "fedelim/engine.hpp"
#include "fedelim/harness.hpp"
#include "fedelim/ingest.hpp"
#include "fedelim/instance.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write to " + path.string());
  return out;
}

fedelim::ResolvedInstance resolve_and_validate(const std::string& ref) {
  fedelim::ResolvedInstance resolved = fedelim::resolve_instance(ref);
  const fedelim::ValidationReport report = fedelim::validate(resolved.instance);
  for (const auto& warning : report.warnings) {
    std::cerr << "warning: " << warning << '\n';
  }
  if (!report.ok()) {
    std::string message = "instance '" + ref + "' is invalid:";
    for (const auto& violation : report.violations) message += "\n  " + violation;
    throw std::runtime_error(message);
  }
  return resolved;
}

void write_outputs(const std::vector<fedelim::TrialRecord>& records,
                   const fedelim::ProblemInstance& instance, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream out = open_for_write(out_dir / "records.csv");
    fedelim::write_records_csv(records, out);
  }
  const auto aggregates = fedelim::aggregate(records, instance);
  {
    std::ofstream out = open_for_write(out_dir / "aggregates.csv");
    fedelim::emit_aggregates(aggregates, fedelim::EmitFormat::Csv, out);
  }
  {
    std::ofstream out = open_for_write(out_dir / "aggregates.json");
    fedelim::emit_aggregates(aggregates, fedelim::EmitFormat::Json, out);
  }
  std::cout << "wrote " << records.size() << " records to " << (out_dir / "records.csv").string()
            << '\n';
}

int cmd_run(const std::string& instance_ref, const std::string& schedule_text, double delta,
            double cost, std::uint32_t trials, std::uint64_t seed, const std::string& out_dir,
            bool trace, double sigma, std::uint64_t max_steps) {
  const auto resolved = resolve_and_validate(instance_ref);
  fedelim::AlgorithmCell cell{fedelim::parse_schedule(schedule_text), cost};

  std::vector<fedelim::Trace> traces;
  const auto records = fedelim::run_cell(
      resolved.instance, resolved.name, cell, delta, trials, seed, sigma, max_steps,
      trace ? fedelim::TraceLevel::Events : fedelim::TraceLevel::None,
      trace ? &traces : nullptr);
  write_outputs(records, resolved.instance, out_dir);
  if (trace) {
    for (std::size_t i = 0; i < traces.size(); ++i) {
      std::ofstream out = open_for_write(fs::path(out_dir) / ("trace_" + std::to_string(i) + ".csv"));
      fedelim::write_trace_csv(traces[i], out);
    }
  }
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("cannot open experiment file: " + spec_path);
  const fedelim::ExperimentSpec spec = fedelim::parse_experiment_spec(in);
  const auto resolved = resolve_and_validate(spec.instance_ref);
  const auto records = fedelim::run_trials(spec, resolved.instance);
  write_outputs(records, resolved.instance, out_dir);
  return 0;
}

int cmd_bounds(const std::string& instance_ref, double delta, double cost,
               std::optional<std::uint64_t> period, bool as_json, const std::string& out_path) {
  const auto resolved = resolve_and_validate(instance_ref);
  const fedelim::BoundReport report = fedelim::bound_report(resolved.instance, delta, cost, period);
  const std::string text =
      as_json ? fedelim::bound_report_json(report) : fedelim::bound_report_text(report);
  if (out_path.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream out = open_for_write(out_path);
    out << text << '\n';
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

int cmd_ingest(const std::string& ratings_path, const std::vector<std::string>& hetrec,
               const std::string& out_path, const std::string& ratings_out) {
  fedelim::JoinReport join;
  const fedelim::JoinReport* join_ptr = nullptr;
  fedelim::RatingsTable table;
  if (!ratings_path.empty()) {
    std::ifstream in(ratings_path);
    if (!in) throw std::runtime_error("cannot open ratings file: " + ratings_path);
    fedelim::RatingsParseReport parsed = fedelim::parse_ratings_csv(in);
    for (const auto& error : parsed.errors) std::cerr << "warning: " << error << '\n';
    table = std::move(parsed.table);
  } else {
    join = fedelim::join_hetrec(
        fedelim::HetrecFiles{hetrec[0], hetrec[1], hetrec[2]});
    for (const auto& error : join.errors) std::cerr << "warning: " << error << '\n';
    table = join.table;
    join_ptr = &join;
  }

  const fedelim::CleanReport cleaned = fedelim::clean(table);
  for (const auto& warning : cleaned.warnings) std::cerr << "note: " << warning << '\n';
  const fedelim::EmpiricalInstance empirical = fedelim::to_empirical_instance(cleaned.table);

  const std::string summary = fedelim::instance_summary_json(empirical, &cleaned, join_ptr);
  if (out_path.empty()) {
    std::cout << summary << '\n';
  } else {
    std::ofstream out = open_for_write(out_path);
    out << summary << '\n';
    std::cout << "wrote " << out_path << '\n';
  }
  if (!ratings_out.empty()) {
    std::ofstream out = open_for_write(ratings_out);
    fedelim::write_ratings_csv(cleaned.table, out);
    std::cout << "wrote " << ratings_out << '\n';
  }
  return 0;
}

int cmd_check(const std::string& records_path, const std::string& bounds_path) {
  std::ifstream records_in(records_path);
  if (!records_in) throw std::runtime_error("cannot open records file: " + records_path);
  const auto records = fedelim::read_records_csv(records_in);

  std::ifstream bounds_in(bounds_path);
  if (!bounds_in) throw std::runtime_error("cannot open bounds file: " + bounds_path);
  std::string bounds_text((std::istreambuf_iterator<char>(bounds_in)),
                          std::istreambuf_iterator<char>());
  const fedelim::BoundReport bounds = fedelim::bound_report_from_json(bounds_text);

  const fedelim::AcceptanceReport report = fedelim::check_acceptance(records, bounds);
  std::cout << fedelim::format_acceptance_report(report);
  return report.all_evaluated_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated fixed-confidence best-arm identification simulator"};
  app.require_subcommand(1);

  // run
  std::string instance_ref, schedule_text = "exp:2", out_dir = "out";
  double delta = 0.1, cost = 0.0, sigma = 1.0;
  std::uint32_t trials = 100;
  std::uint64_t seed = 0, max_steps = std::uint64_t{1} << 31;
  bool trace = false;
  auto* run = app.add_subcommand("run", "Run one (schedule, C, delta) cell");
  run->add_option("--instance", instance_ref, "instance file, ratings CSV, eq17, or bernoulli-eq36")
      ->required();
  run->add_option("--schedule", schedule_text, "every | exp:<base> | periodic:<H>[:<offset>] | superexp");
  run->add_option("--delta", delta, "error probability target");
  run->add_option("--cost", cost, "uplink cost C per scalar sent");
  run->add_option("--trials", trials, "trials to run");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--sigma", sigma, "confidence-radius scale");
  run->add_option("--max-steps", max_steps, "safety cap on steps per trial");
  run->add_flag("--trace", trace, "dump one event-trace CSV per trial");

  // sweep
  std::string spec_path;
  auto* sweep = app.add_subcommand("sweep", "Run a full experiment grid from a spec file");
  sweep->add_option("--spec", spec_path, "experiment JSON file")->required();
  sweep->add_option("--out", out_dir, "output directory");

  // bounds
  std::uint64_t period = 0;
  bool as_json = false;
  std::string out_path;
  auto* bounds = app.add_subcommand("bounds", "Print the theory bound report for an instance");
  bounds->add_option("--instance", instance_ref, "instance reference")->required();
  bounds->add_option("--delta", delta, "error probability target");
  bounds->add_option("--cost", cost, "uplink cost C");
  bounds->add_option("--period", period, "period for the scheme table (default: round(H*))");
  bounds->add_flag("--json", as_json, "emit JSON instead of the text table");
  bounds->add_option("--out", out_path, "write to file instead of stdout");

  // ingest
  std::string ratings_path, ratings_out;
  std::vector<std::string> hetrec;
  auto* ingest = app.add_subcommand("ingest", "Build an empirical instance from rating tables");
  ingest->add_option("--ratings", ratings_path, "client,arm,rating CSV");
  ingest->add_option("--hetrec", hetrec, "ratings, countries, genres TSV paths")->expected(3);
  ingest->add_option("--out", out_path, "instance summary JSON output");
  ingest->add_option("--ratings-out", ratings_out, "write the cleaned table as a ratings CSV");

  // check
  std::string records_path, bounds_path;
  auto* check = app.add_subcommand("check", "Evaluate acceptance predicates on a records CSV");
  check->add_option("--records", records_path, "records CSV from run/sweep")->required();
  check->add_option("--bounds", bounds_path, "bound report JSON (eq17, delta=0.01)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(instance_ref, schedule_text, delta, cost, trials, seed, out_dir, trace,
                     sigma, max_steps);
    }
    if (sweep->parsed()) return cmd_sweep(spec_path, out_dir);
    if (bounds->parsed()) {
      return cmd_bounds(instance_ref, delta, cost,
                        period ? std::optional<std::uint64_t>(period) : std::nullopt, as_json,
                        out_path);
    }
    if (ingest->parsed()) {
      if (ratings_path.empty() == hetrec.empty()) {
        throw std::runtime_error("ingest needs exactly one of --ratings or --hetrec");
      }
      return cmd_ingest(ratings_path, hetrec, out_path, ratings_out);
    }
    if (check->parsed()) return cmd_check(records_path, bounds_path);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 1;
  }
  return 0;
}
