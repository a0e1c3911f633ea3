#include "fedelim/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fedelim/engine.hpp"
#include "text_util.hpp"

namespace fedelim {

namespace {

using json = nlohmann::json;

void require_gap(double gap) {
  if (!(gap > 0.0)) throw std::invalid_argument("gap must be positive");
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
}

double radius(std::uint64_t n, std::uint32_t K, std::uint32_t M, double delta, RadiusScope scope) {
  return scope == RadiusScope::Local ? local_radius(n, K, M, delta) : global_radius(n, K, M, delta);
}

} // namespace

double t_km(double gap, std::uint32_t num_arms, std::uint32_t num_clients, double delta) {
  require_gap(gap);
  require_delta(delta);
  const double gap2 = gap * gap;
  return 102.0 * std::log(64.0 * std::sqrt(8.0 * num_arms * num_clients / delta) / gap2) / gap2 +
         1.0;
}

double t_k(double gap, std::uint32_t num_arms, std::uint32_t num_clients, double delta) {
  require_gap(gap);
  require_delta(delta);
  const double mgap2 = num_clients * gap * gap;
  return 102.0 * std::log(64.0 * std::sqrt(8.0 * num_arms / delta) / mgap2) / mgap2 + 1.0;
}

double t_total(const ProblemInstance& instance, double delta) {
  const GapStructure gaps = compute_gaps(instance);
  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;
  double total = 0.0;
  for (std::uint32_t k = 0; k < K; ++k) {
    const double global_term = t_k(gaps.global_gap(k), K, M, delta);
    for (std::uint32_t m = 0; m < M; ++m) {
      total += std::max(t_km(gaps.local_gap(k, m), K, M, delta), global_term);
    }
  }
  return total;
}

SparseCommBounds sparse_comm_bounds(const ProblemInstance& instance, double delta,
                               double uplink_cost) {
  const GapStructure gaps = compute_gaps(instance);
  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;

  SparseCommBounds bounds;
  double total = 0.0;
  double log_rounds = 0.0;
  for (std::uint32_t k = 0; k < K; ++k) {
    const double global_term = t_k(gaps.global_gap(k), K, M, delta);
    log_rounds += std::ceil(std::log2(global_term));
    if (uplink_cost * std::log(global_term) > global_term) bounds.precondition_ok = false;
    for (std::uint32_t m = 0; m < M; ++m) {
      const double local_term = t_km(gaps.local_gap(k, m), K, M, delta);
      bounds.pull_bound += std::max(local_term, 2.0 * global_term);
      total += std::max(local_term, global_term);
    }
  }
  bounds.comm_bound = uplink_cost * M * log_rounds;
  bounds.total_bound = 3.0 * total;
  return bounds;
}

double lower_bound(const ProblemInstance& instance, double delta, LowerBoundForm form) {
  if (!(delta > 0.0 && delta < 1.0 / 2.4)) {
    throw std::invalid_argument("lower bound requires delta in (0, 1/2.4)");
  }
  const GapStructure gaps = compute_gaps(instance);
  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;
  const double factor = form == LowerBoundForm::DoubledLog ? 2.0 : 1.0;
  const double log_term = factor * std::log(1.0 / (2.4 * delta));

  double total = 0.0;
  const double m2 = static_cast<double>(M) * M;
  for (std::uint32_t k = 0; k < K; ++k) {
    const double global_gap2 = gaps.global_gap(k) * gaps.global_gap(k);
    for (std::uint32_t m = 0; m < M; ++m) {
      const double local_gap2 = gaps.local_gap(k, m) * gaps.local_gap(k, m);
      total += std::max(log_term / local_gap2, log_term / (m2 * global_gap2));
    }
  }
  return total;
}

std::uint64_t critical_sample_size(double gap, std::uint32_t num_arms,
                                   std::uint32_t num_clients, double delta,
                                   RadiusScope scope) {
  require_gap(gap);
  require_delta(delta);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 62;
  const double target = gap / 4.0;

  // The radius rises while ln(c n^2) < 2 and falls afterwards, so its
  // integer maximizer sits next to e/sqrt(c); with c = 8K[M]/delta >= 16
  // that is n = 1 for any valid parameters, but probe the neighborhood
  // anyway.
  const double c = scope == RadiusScope::Local ? 8.0 * num_arms * num_clients / delta
                                               : 8.0 * num_arms / delta;
  std::uint64_t peak = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::ceil(std::exp(1.0) / std::sqrt(c))));
  double peak_value = radius(peak, num_arms, num_clients, delta, scope);
  for (std::uint64_t n = (peak > 1 ? peak - 1 : 1); n <= peak + 1; ++n) {
    const double value = radius(n, num_arms, num_clients, delta, scope);
    if (value > peak_value) {
      peak = n;
      peak_value = value;
    }
  }
  if (peak_value <= target) return 1;

  std::uint64_t lo = peak; // radius(lo) > target
  std::uint64_t hi = peak;
  while (radius(hi, num_arms, num_clients, delta, scope) > target) {
    if (hi > kLimit) throw std::overflow_error("critical sample size exceeds 2^62");
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (radius(mid, num_arms, num_clients, delta, scope) <= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::uint64_t critical_sample_size_upper(double gap, std::uint32_t num_arms,
                                         std::uint32_t num_clients, double delta,
                                         RadiusScope scope) {
  require_gap(gap);
  require_delta(delta);
  const double a = scope == RadiusScope::Local ? gap * gap / 64.0
                                               : num_clients * gap * gap / 64.0;
  const double b = scope == RadiusScope::Local
                       ? 0.5 * std::log(8.0 * num_arms * num_clients / delta)
                       : 0.5 * std::log(8.0 * num_arms / delta);
  constexpr double kEOverEMinusOne = 1.5819767068693265; // e / (e - 1)
  const double bound = kEOverEMinusOne * (b - std::log(a)) / a;
  if (!(bound < 9e18)) throw std::overflow_error("critical sample size bound exceeds 2^62");
  return static_cast<std::uint64_t>(std::ceil(std::max(1.0, bound)));
}

double optimal_period(double uplink_cost, double total_budget, std::uint32_t num_clients,
                      std::uint32_t num_arms) {
  if (uplink_cost < 0.0) throw std::invalid_argument("uplink cost must be >= 0");
  if (!(total_budget > 0.0)) throw std::invalid_argument("total budget must be positive");
  if (uplink_cost == 0.0) return 1.0; // communicate always
  return std::sqrt(uplink_cost * total_budget / (static_cast<double>(num_clients) * num_arms));
}

double solve_exponential_base(double rhs) {
  if (!(rhs > 0.0)) throw std::invalid_argument("rhs must be positive");
  auto f = [](double x) {
    const double lx = std::log(x);
    return x * lx * lx;
  };
  double lo = 1.0;
  double hi = 2.0;
  while (f(hi) < rhs) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < rhs ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double optimal_base(double uplink_cost, std::uint32_t num_clients, double total_budget,
                    std::span<const double> t_k_values) {
  if (uplink_cost < 0.0) throw std::invalid_argument("uplink cost must be >= 0");
  if (!(total_budget > 0.0)) throw std::invalid_argument("total budget must be positive");
  if (uplink_cost == 0.0) return 1.0; // boundary: communicate maximally often
  double log_sum = 0.0;
  for (double value : t_k_values) {
    if (!(value > 1.0)) throw std::invalid_argument("every global budget term must exceed 1");
    log_sum += std::log(value);
  }
  const double rhs = uplink_cost * num_clients / total_budget * log_sum;
  return solve_exponential_base(rhs);
}

namespace {

// Smallest super-exponential step 2^(2^t) >= x, together with the number of
// communication rounds up to and including it (t + 1).
std::pair<double, double> super_step_reaching(double x) {
  double step = 2.0;
  double rounds = 1.0;
  while (step < x && step < 1e300) {
    step *= step;
    rounds += 1.0;
  }
  return {step, rounds};
}

} // namespace

std::vector<SchemeBoundRow> scheme_bound_table(const ProblemInstance& instance, double delta,
                                               double uplink_cost, std::uint64_t period,
                                               double base) {
  if (period == 0) throw std::invalid_argument("period must be positive");
  if (!(base > 1.0)) throw std::invalid_argument("base must exceed 1");
  const GapStructure gaps = compute_gaps(instance);
  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;
  const double H = static_cast<double>(period);
  const double C = uplink_cost;
  const double MK = static_cast<double>(M) * K;

  double total = 0.0;
  std::vector<double> global_terms(K);
  for (std::uint32_t k = 0; k < K; ++k) {
    global_terms[k] = t_k(gaps.global_gap(k), K, M, delta);
    for (std::uint32_t m = 0; m < M; ++m) {
      total += std::max(t_km(gaps.local_gap(k, m), K, M, delta), global_terms[k]);
    }
  }

  SchemeBoundRow periodic{"periodic:" + detail::format_u64(period), 0, 0, 0, 0, 0, 0};
  SchemeBoundRow exponential{"exp:" + detail::format_double(base), 0, 0, 0, 0, 0, 0};
  SchemeBoundRow super{"superexp", 0, 0, 0, 0, 0, 0};
  const double log_base = std::log(base);

  for (std::uint32_t k = 0; k < K; ++k) {
    const double tk = global_terms[k];
    const double periodic_term = std::ceil(tk / H) * H;
    const double exp_term = base * tk;
    const auto [super_step, super_rounds] = super_step_reaching(tk);
    periodic.comm_bound += C * M * std::ceil(tk / H);
    exponential.comm_bound += C * M * std::ceil(std::log(tk) / log_base);
    exponential.comm_bound_relaxed += C * M * (std::log(tk) / log_base);
    super.comm_bound += C * M * super_rounds;
    for (std::uint32_t m = 0; m < M; ++m) {
      const double tkm = t_km(gaps.local_gap(k, m), K, M, delta);
      periodic.pull_bound += std::max(tkm, periodic_term);
      exponential.pull_bound += std::max(tkm, exp_term);
      super.pull_bound += std::max(tkm, super_step);
      super.pull_bound_relaxed += std::max(tkm, tk * tk);
    }
  }

  periodic.total_bound = periodic.pull_bound + periodic.comm_bound;
  periodic.pull_bound_relaxed = total + H * MK;
  periodic.comm_bound_relaxed = C * total / H + C * MK;
  periodic.total_bound_relaxed = periodic.pull_bound_relaxed + periodic.comm_bound_relaxed;

  exponential.total_bound = exponential.pull_bound + exponential.comm_bound;
  exponential.pull_bound_relaxed = base * total;
  exponential.comm_bound_relaxed += C * MK;
  exponential.total_bound_relaxed = exponential.pull_bound_relaxed + exponential.comm_bound_relaxed;

  super.total_bound = super.pull_bound + super.comm_bound;
  super.comm_bound_relaxed = super.comm_bound;
  super.total_bound_relaxed = super.pull_bound_relaxed + super.comm_bound_relaxed;

  return {periodic, exponential, super};
}

BoundReport bound_report(const ProblemInstance& instance, double delta, double uplink_cost,
                         std::optional<std::uint64_t> period) {
  require_delta(delta);
  const GapStructure gaps = compute_gaps(instance);
  const std::uint32_t K = instance.num_arms;
  const std::uint32_t M = instance.num_clients;

  BoundReport report;
  report.num_arms = K;
  report.num_clients = M;
  report.delta = delta;
  report.uplink_cost = uplink_cost;

  double min_gap = std::numeric_limits<double>::infinity();
  for (double gap : gaps.local_gaps) min_gap = std::min(min_gap, gap);
  for (double gap : gaps.global_gaps) min_gap = std::min(min_gap, gap);
  if (min_gap < 1e-6) {
    report.warnings.push_back("gap below 1e-6: bound arithmetic may be ill-conditioned");
  }

  report.t_km_values.resize(static_cast<std::size_t>(K) * M);
  report.t_k_values.resize(K);
  for (std::uint32_t k = 0; k < K; ++k) {
    report.t_k_values[k] = t_k(gaps.global_gap(k), K, M, delta);
    for (std::uint32_t m = 0; m < M; ++m) {
      report.t_km_values[static_cast<std::size_t>(k) * M + m] =
          t_km(gaps.local_gap(k, m), K, M, delta);
    }
  }
  report.total_budget = t_total(instance, delta);

  const SparseCommBounds sparse = sparse_comm_bounds(instance, delta, uplink_cost);
  report.sparse_pull_bound = sparse.pull_bound;
  report.sparse_comm_bound = sparse.comm_bound;
  report.sparse_total_bound = sparse.total_bound;
  report.precondition_ok = sparse.precondition_ok;

  if (delta < 1.0 / 2.4) {
    report.lower_bound_doubled_log = lower_bound(instance, delta, LowerBoundForm::DoubledLog);
    report.lower_bound_single_log = lower_bound(instance, delta, LowerBoundForm::SingleLog);
  } else {
    report.warnings.push_back("delta >= 1/2.4: lower bound undefined, reported as 0");
  }

  report.h_star = optimal_period(uplink_cost, report.total_budget, M, K);
  report.lambda_star = optimal_base(uplink_cost, M, report.total_budget, report.t_k_values);

  report.table_period =
      period.value_or(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(report.h_star))));
  report.scheme_table = scheme_bound_table(instance, delta, uplink_cost, report.table_period);
  return report;
}

std::string bound_report_text(const BoundReport& report) {
  std::ostringstream out;
  char line[256];
  out << "bound report: K=" << report.num_arms << " M=" << report.num_clients
      << " delta=" << report.delta << " C=" << report.uplink_cost << "\n\n";

  out << "per-arm global budgets T_k:\n";
  for (std::uint32_t k = 0; k < report.num_arms; ++k) {
    std::snprintf(line, sizeof(line), "  arm %-3u %14.2f\n", k + 1, report.t_k_values[k]);
    out << line;
  }
  out << "per-cell local budgets T_km (rows arms, columns clients):\n";
  for (std::uint32_t k = 0; k < report.num_arms; ++k) {
    out << "  arm " << (k + 1) << ":";
    for (std::uint32_t m = 0; m < report.num_clients; ++m) {
      std::snprintf(line, sizeof(line), " %12.2f",
                    report.t_km_values[static_cast<std::size_t>(k) * report.num_clients + m]);
      out << line;
    }
    out << '\n';
  }

  std::snprintf(line, sizeof(line),
                "\nT = %.2f\npull bound  = %.2f\ncomm bound  = %.2f\ntotal bound = %.2f "
                "(precondition %s)\n",
                report.total_budget, report.sparse_pull_bound, report.sparse_comm_bound,
                report.sparse_total_bound, report.precondition_ok ? "ok" : "VIOLATED");
  out << line;
  std::snprintf(line, sizeof(line),
                "lower bound = %.2f (doubled-log form) / %.2f (single-log form)\n"
                "H* = %.2f   lambda* = %.6f\n\n",
                report.lower_bound_doubled_log, report.lower_bound_single_log, report.h_star,
                report.lambda_star);
  out << line;

  out << "scheme bounds (H=" << report.table_period << "):\n";
  std::snprintf(line, sizeof(line), "  %-14s %14s %14s %14s %14s %14s %14s\n", "scheme", "pulls",
                "comm", "total", "pulls~", "comm~", "total~");
  out << line;
  for (const auto& row : report.scheme_table) {
    std::snprintf(line, sizeof(line), "  %-14s %14.1f %14.1f %14.1f %14.1f %14.1f %14.1f\n",
                  row.scheme.c_str(), row.pull_bound, row.comm_bound, row.total_bound,
                  row.pull_bound_relaxed, row.comm_bound_relaxed, row.total_bound_relaxed);
    out << line;
  }
  return out.str();
}

std::string bound_report_json(const BoundReport& report) {
  json j;
  j["num_arms"] = report.num_arms;
  j["num_clients"] = report.num_clients;
  j["delta"] = report.delta;
  j["uplink_cost"] = report.uplink_cost;
  j["t_km"] = report.t_km_values;
  j["t_k"] = report.t_k_values;
  j["total_budget"] = report.total_budget;
  j["sparse_pull_bound"] = report.sparse_pull_bound;
  j["sparse_comm_bound"] = report.sparse_comm_bound;
  j["sparse_total_bound"] = report.sparse_total_bound;
  j["precondition_ok"] = report.precondition_ok;
  j["lower_bound_doubled_log"] = report.lower_bound_doubled_log;
  j["lower_bound_single_log"] = report.lower_bound_single_log;
  j["h_star"] = report.h_star;
  j["lambda_star"] = report.lambda_star;
  j["table_period"] = report.table_period;
  json table = json::array();
  for (const auto& row : report.scheme_table) {
    table.push_back({{"scheme", row.scheme},
                     {"pull_bound", row.pull_bound},
                     {"comm_bound", row.comm_bound},
                     {"total_bound", row.total_bound},
                     {"pull_bound_relaxed", row.pull_bound_relaxed},
                     {"comm_bound_relaxed", row.comm_bound_relaxed},
                     {"total_bound_relaxed", row.total_bound_relaxed}});
  }
  j["scheme_table"] = table;
  j["warnings"] = report.warnings;
  return j.dump(2);
}

BoundReport bound_report_from_json(const std::string& text) {
  const json j = json::parse(text);
  BoundReport report;
  report.num_arms = j.at("num_arms").get<std::uint32_t>();
  report.num_clients = j.at("num_clients").get<std::uint32_t>();
  report.delta = j.at("delta").get<double>();
  report.uplink_cost = j.at("uplink_cost").get<double>();
  report.t_km_values = j.at("t_km").get<std::vector<double>>();
  report.t_k_values = j.at("t_k").get<std::vector<double>>();
  report.total_budget = j.at("total_budget").get<double>();
  report.sparse_pull_bound = j.at("sparse_pull_bound").get<double>();
  report.sparse_comm_bound = j.at("sparse_comm_bound").get<double>();
  report.sparse_total_bound = j.at("sparse_total_bound").get<double>();
  report.precondition_ok = j.at("precondition_ok").get<bool>();
  report.lower_bound_doubled_log = j.at("lower_bound_doubled_log").get<double>();
  report.lower_bound_single_log = j.at("lower_bound_single_log").get<double>();
  report.h_star = j.at("h_star").get<double>();
  report.lambda_star = j.at("lambda_star").get<double>();
  report.table_period = j.at("table_period").get<std::uint64_t>();
  for (const auto& row : j.at("scheme_table")) {
    report.scheme_table.push_back({row.at("scheme").get<std::string>(),
                                   row.at("pull_bound").get<double>(),
                                   row.at("comm_bound").get<double>(),
                                   row.at("total_bound").get<double>(),
                                   row.at("pull_bound_relaxed").get<double>(),
                                   row.at("comm_bound_relaxed").get<double>(),
                                   row.at("total_bound_relaxed").get<double>()});
  }
  if (j.contains("warnings")) report.warnings = j.at("warnings").get<std::vector<std::string>>();
  return report;
}

} // namespace fedelim
