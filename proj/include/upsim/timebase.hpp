// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>

namespace upsim::timebase {

/// Picoseconds per second. One tick of scenario time is one picosecond:
/// light travels about 0.3 mm per tick, far below every positioning
/// tolerance in this library, and integer time keeps simulation runs and
/// signed beacon encodings bit-exact.
inline constexpr std::int64_t kTicksPerSecond = 1'000'000'000'000LL;

inline constexpr double kSecondsPerDay = 86'400.0;

/// A point in scenario time: a signed count of picoseconds since the
/// scenario epoch. Total ordering is integer ordering.
struct Instant {
  std::int64_t ticks = 0;

  auto operator<=>(const Instant&) const = default;
};

/// Converts seconds to an Instant, rounding to the nearest tick.
/// Throws Error if the value does not fit the tick range.
Instant instant_from_seconds(double seconds);

inline double to_seconds(Instant t) {
  return static_cast<double>(t.ticks) / static_cast<double>(kTicksPerSecond);
}

inline Instant advanced(Instant t, std::int64_t delta_ticks) {
  return Instant{t.ticks + delta_ticks};
}

/// Seconds from a to b (negative when b precedes a).
inline double delta_seconds(Instant a, Instant b) {
  return static_cast<double>(b.ticks - a.ticks) / static_cast<double>(kTicksPerSecond);
}

/// Days elapsed from a to b.
inline double elapsed_days(Instant a, Instant b) {
  return delta_seconds(a, b) / kSecondsPerDay;
}

/// Worst-case model of a free-running clock: a fixed offset at the last
/// synchronization plus a constant-rate drift accumulated since then. The
/// drift rate is a worst-case magnitude; its sign is chosen per scenario.
/// Accumulation is linear by choice -- a random-walk error model would be a
/// plausible alternative, but the worst-case line dominates it.
struct ClockModel {
  double initial_offset_s = 0.0;   ///< offset at last_sync, seconds
  double drift_s_per_day = 0.0;    ///< worst-case drift magnitude
  Instant last_sync;               ///< when the clock was last trued up
  double validity_days = 30.0;     ///< service period after last_sync
};

/// Reads the modeled clock at true time `true_time` with the drift applied
/// in direction `drift_sign` (+1 fast, -1 slow). The reading is quantized
/// to the tick grid. Throws ClockDomainError when true_time precedes
/// last_sync.
Instant read(const ClockModel& clock, Instant true_time, int drift_sign);

/// Position error accumulated by a clock of precision `delta_t_s_per_day`
/// over `period_days` at signal speed `c_m_per_s`: the product of the
/// three.
double accumulated_position_error(double delta_t_s_per_day, double period_days,
                                  double c_m_per_s);

/// True once more than validity_days have elapsed since last_sync. The
/// validity interval is closed: a clock at exactly its validity boundary is
/// still in service.
bool expired(const ClockModel& clock, Instant true_time);

}  // namespace upsim::timebase
