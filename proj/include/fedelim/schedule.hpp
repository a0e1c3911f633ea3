#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fedelim {

enum class ScheduleKind { EveryStep, Exponential, Periodic, SuperExponential };

/// When clients talk to the server. The step set is
///   EveryStep:        all n >= 1
///   Exponential(b):   { ceil(b^t) : t = 0,1,2,... }, duplicates removed
///   Periodic(H, off): { off, off+H, off+2H, ... }
///   SuperExponential: { 2^(2^t) : t = 0,1,2,... }, plus n=1 when
///                     include_first is set (default), because the literal
///                     set starts at n=2 and would skip the first
///                     opportunity to aggregate.
struct Schedule {
  ScheduleKind kind = ScheduleKind::EveryStep;
  double base = 2.0;        // Exponential only; > 1
  std::uint64_t period = 1; // Periodic only; >= 1
  std::uint64_t offset = 1; // Periodic only; >= 1
  bool include_first = true; // SuperExponential only

  static Schedule every_step();
  static Schedule exponential(double base);
  static Schedule periodic(std::uint64_t period, std::uint64_t offset = 1);
  static Schedule super_exponential(bool include_first = true);
};

/// True iff n belongs to the schedule's step set. O(1) arithmetic.
bool is_comm_step(const Schedule& schedule, std::uint64_t n);

/// Smallest schedule step strictly greater than n (n may be 0). Saturates
/// at UINT64_MAX if the next step is not representable.
std::uint64_t next_comm_step(const Schedule& schedule, std::uint64_t n);

/// All schedule steps in [1, horizon], ascending, no duplicates.
std::vector<std::uint64_t> enumerate_steps(const Schedule& schedule, std::uint64_t horizon);

/// Textual form: "every" | "exp:<base>" | "periodic:<H>[:<offset>]" |
/// "superexp[:nofirst]". Throws std::invalid_argument on bad input.
Schedule parse_schedule(std::string_view text);
std::string to_string(const Schedule& schedule);

} // namespace fedelim
