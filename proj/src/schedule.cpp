#include "fedelim/schedule.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "text_util.hpp"

namespace fedelim {

namespace {

constexpr std::uint64_t kNoStep = std::numeric_limits<std::uint64_t>::max();
constexpr double kMinBase = 1.0 + 1e-6; // below this, dedup degenerates; use EveryStep

// ceil(base^t) saturated to uint64. Shared by every exponential-schedule
// path so that rounding is consistent.
std::uint64_t exp_step_at(double base, std::int64_t t) {
  if (t < 0) return 1;
  const double value = std::pow(base, static_cast<double>(t));
  if (!(value < 9.2e18)) return kNoStep;
  return static_cast<std::uint64_t>(std::ceil(value));
}

// Steps 2^(2^t); t <= 5 fits in uint64.
std::uint64_t super_step_at(int t) {
  if (t > 5) return kNoStep;
  return std::uint64_t{1} << (std::uint64_t{1} << t);
}

} // namespace

Schedule Schedule::every_step() { return Schedule{ScheduleKind::EveryStep, 2.0, 1, 1, true}; }

Schedule Schedule::exponential(double base) {
  if (!(base > 1.0)) throw std::invalid_argument("exponential schedule base must be > 1");
  return Schedule{ScheduleKind::Exponential, std::max(base, kMinBase), 1, 1, true};
}

Schedule Schedule::periodic(std::uint64_t period, std::uint64_t offset) {
  if (period == 0) throw std::invalid_argument("periodic schedule period must be positive");
  if (offset == 0) throw std::invalid_argument("periodic schedule offset must be positive");
  return Schedule{ScheduleKind::Periodic, 2.0, period, offset, true};
}

Schedule Schedule::super_exponential(bool include_first) {
  return Schedule{ScheduleKind::SuperExponential, 2.0, 1, 1, include_first};
}

bool is_comm_step(const Schedule& schedule, std::uint64_t n) {
  if (n == 0) return false;
  switch (schedule.kind) {
    case ScheduleKind::EveryStep:
      return true;
    case ScheduleKind::Exponential: {
      if (n == 1) return true; // t = 0
      // Any t with ceil(base^t) == n satisfies base^t in (n-1, n]; the
      // largest integer t with base^t <= n is the only candidate that can
      // land there. +-2 covers log() rounding.
      const double t_star = std::log(static_cast<double>(n)) / std::log(schedule.base);
      const auto t0 = static_cast<std::int64_t>(std::floor(t_star));
      for (std::int64_t t = std::max<std::int64_t>(0, t0 - 2); t <= t0 + 2; ++t) {
        if (exp_step_at(schedule.base, t) == n) return true;
      }
      return false;
    }
    case ScheduleKind::Periodic:
      return n >= schedule.offset && (n - schedule.offset) % schedule.period == 0;
    case ScheduleKind::SuperExponential: {
      if (n == 1) return schedule.include_first;
      if (!std::has_single_bit(n)) return false;
      const unsigned exponent = static_cast<unsigned>(std::countr_zero(n));
      return exponent >= 1 && std::has_single_bit(exponent);
    }
  }
  return false;
}

std::uint64_t next_comm_step(const Schedule& schedule, std::uint64_t n) {
  switch (schedule.kind) {
    case ScheduleKind::EveryStep:
      return n == kNoStep ? kNoStep : n + 1;
    case ScheduleKind::Exponential: {
      if (n == 0) return 1;
      // Smallest t with base^t > n; its ceil is the next step.
      const double t_star = std::log(static_cast<double>(n)) / std::log(schedule.base);
      auto t = static_cast<std::int64_t>(std::floor(t_star)) - 2;
      if (t < 0) t = 0;
      while (exp_step_at(schedule.base, t) <= n) ++t;
      return exp_step_at(schedule.base, t);
    }
    case ScheduleKind::Periodic: {
      if (n < schedule.offset) return schedule.offset;
      const std::uint64_t completed = (n - schedule.offset) / schedule.period + 1;
      if (completed > (kNoStep - schedule.offset) / schedule.period) return kNoStep;
      return schedule.offset + completed * schedule.period;
    }
    case ScheduleKind::SuperExponential: {
      if (n == 0 && schedule.include_first) return 1;
      for (int t = 0; t <= 6; ++t) {
        const std::uint64_t step = super_step_at(t);
        if (step > n) return step;
      }
      return kNoStep;
    }
  }
  return kNoStep;
}

std::vector<std::uint64_t> enumerate_steps(const Schedule& schedule, std::uint64_t horizon) {
  std::vector<std::uint64_t> steps;
  std::uint64_t n = next_comm_step(schedule, 0);
  while (n <= horizon) {
    steps.push_back(n);
    if (n == kNoStep) break;
    n = next_comm_step(schedule, n);
  }
  return steps;
}

Schedule parse_schedule(std::string_view text) {
  if (text == "every") return Schedule::every_step();
  if (text == "superexp") return Schedule::super_exponential(true);
  if (text == "superexp:nofirst") return Schedule::super_exponential(false);
  if (text.starts_with("exp:")) {
    double base = 0.0;
    if (!detail::parse_double(text.substr(4), base)) {
      throw std::invalid_argument("bad exponential schedule spec: " + std::string(text));
    }
    return Schedule::exponential(base);
  }
  if (text.starts_with("periodic:")) {
    const auto parts = detail::split(text.substr(9), ':');
    std::uint64_t period = 0, offset = 1;
    if (parts.empty() || parts.size() > 2 || !detail::parse_u64(parts[0], period) ||
        (parts.size() == 2 && !detail::parse_u64(parts[1], offset))) {
      throw std::invalid_argument("bad periodic schedule spec: " + std::string(text));
    }
    return Schedule::periodic(period, offset);
  }
  throw std::invalid_argument("unknown schedule spec: " + std::string(text));
}

std::string to_string(const Schedule& schedule) {
  switch (schedule.kind) {
    case ScheduleKind::EveryStep:
      return "every";
    case ScheduleKind::Exponential:
      return "exp:" + detail::format_double(schedule.base);
    case ScheduleKind::Periodic: {
      std::string out = "periodic:" + detail::format_u64(schedule.period);
      if (schedule.offset != 1) out += ":" + detail::format_u64(schedule.offset);
      return out;
    }
    case ScheduleKind::SuperExponential:
      return schedule.include_first ? "superexp" : "superexp:nofirst";
  }
  return "?";
}

} // namespace fedelim
