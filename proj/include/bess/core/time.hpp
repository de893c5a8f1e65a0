#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace bess {

/// Wall-clock instant, UTC, second resolution.
using Timestamp = std::chrono::sys_seconds;
/// Calendar day, UTC.
using Date = std::chrono::sys_days;
using Minutes = std::chrono::minutes;
using Seconds = std::chrono::seconds;

/// Accepts `YYYY-MM-DDTHH:MM[:SS][Z|+00:00]`, a space instead of `T`, or a bare date.
Timestamp parse_timestamp(std::string_view text);
/// `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(Timestamp ts);

Date parse_date(std::string_view text);
std::string format_date(Date d);

inline Date date_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }
inline Timestamp start_of(Date d) { return Timestamp{d}; }

/// 0 = Sunday ... 6 = Saturday.
int weekday_index(Date d);
/// 1-based ordinal day within the year.
int day_of_year(Date d);

/// Hours elapsed from `from` to `to` (may be negative or fractional).
inline double hours_between(Timestamp from, Timestamp to) {
  return static_cast<double>((to - from).count()) / 3600.0;
}

inline Timestamp add_hours(Timestamp ts, double hours) {
  return ts + Seconds{static_cast<long long>(hours * 3600.0 + (hours >= 0 ? 0.5 : -0.5))};
}

}  // namespace bess
