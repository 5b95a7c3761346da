#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace loadlab {

using UtcSeconds = std::chrono::sys_seconds;
using LocalSeconds = std::chrono::local_seconds;
using LocalDate = std::chrono::local_days;

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Parses `YYYY-MM-DDTHH:MM:SS` followed by `Z` or `+00:00` (or nothing).
/// Returns false on any syntax or range error.
bool parse_utc_timestamp(std::string_view text, UtcSeconds& out);

/// Parses `YYYY-MM-DD`.
bool parse_date(std::string_view text, LocalDate& out);

std::string format_utc_timestamp(UtcSeconds t);
std::string format_date(LocalDate d);

/// Static UTC offset, no DST.
inline LocalSeconds to_local(UtcSeconds t, int utc_offset_minutes) {
  return LocalSeconds{t.time_since_epoch() + std::chrono::minutes{utc_offset_minutes}};
}

inline UtcSeconds to_utc(LocalSeconds t, int utc_offset_minutes) {
  return UtcSeconds{t.time_since_epoch() - std::chrono::minutes{utc_offset_minutes}};
}

inline std::int64_t seconds_of(LocalSeconds t) { return t.time_since_epoch().count(); }

inline LocalSeconds floor_hour(LocalSeconds t) {
  return std::chrono::floor<std::chrono::hours>(t);
}

inline LocalDate date_of(LocalSeconds t) { return std::chrono::floor<std::chrono::days>(t); }

inline int days_between(LocalDate from, LocalDate to) {
  return static_cast<int>((to - from).count());
}

/// Monday..Friday.
bool is_weekday(LocalDate d);

}  // namespace loadlab
