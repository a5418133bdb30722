// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/timebase.hpp"

#include <cmath>
#include <limits>

#include "upsim/errors.hpp"

namespace upsim::timebase {

namespace {

std::int64_t checked_round_ticks(double seconds, const char* what) {
  const double ticks = seconds * static_cast<double>(kTicksPerSecond);
  if (!(ticks >= -9.2e18 && ticks <= 9.2e18)) {
    throw Error(std::string(what) + ": value outside the representable tick range");
  }
  return std::llround(ticks);
}

}  // namespace

Instant instant_from_seconds(double seconds) {
  return Instant{checked_round_ticks(seconds, "instant_from_seconds")};
}

Instant read(const ClockModel& clock, Instant true_time, int drift_sign) {
  if (true_time < clock.last_sync) {
    throw ClockDomainError("clock read before last synchronization");
  }
  const double days = elapsed_days(clock.last_sync, true_time);
  const double offset_s =
      clock.initial_offset_s + static_cast<double>(drift_sign) * clock.drift_s_per_day * days;
  return advanced(true_time, checked_round_ticks(offset_s, "clock offset"));
}

double accumulated_position_error(double delta_t_s_per_day, double period_days,
                                  double c_m_per_s) {
  return c_m_per_s * delta_t_s_per_day * period_days;
}

bool expired(const ClockModel& clock, Instant true_time) {
  return elapsed_days(clock.last_sync, true_time) > clock.validity_days;
}

}  // namespace upsim::timebase
