#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "stormfit/errors.hpp"

namespace stormfit {

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// A UTC instant with second resolution, stored as seconds since
/// 1970-01-01T00:00:00Z. All file formats handled here are UTC-only.
struct UtcTime {
  std::int64_t seconds = 0;

  auto operator<=>(const UtcTime&) const = default;
};

inline UtcTime operator+(UtcTime t, std::int64_t secs) { return {t.seconds + secs}; }
inline UtcTime operator-(UtcTime t, std::int64_t secs) { return {t.seconds - secs}; }
inline std::int64_t operator-(UtcTime a, UtcTime b) { return a.seconds - b.seconds; }

namespace detail {

// Proleptic Gregorian day count (days since 1970-01-01).
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                       static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

inline bool parse_fixed_uint(std::string_view s, int& out) {
  if (s.empty()) return false;
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 0) return false;
  out = v;
  return true;
}

}  // namespace detail

inline bool valid_civil(int year, int month, int day, int hour, int minute, int second) {
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 60) return false;
  static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int max_day = lengths[month - 1] + ((month == 2 && leap) ? 1 : 0);
  return day <= max_day;
}

inline UtcTime make_utc(int year, int month, int day, int hour = 0, int minute = 0,
                        int second = 0) {
  if (!valid_civil(year, month, day, hour, minute, second))
    throw FormatError("invalid calendar date " + std::to_string(year) + "-" +
                      std::to_string(month) + "-" + std::to_string(day) + " " +
                      std::to_string(hour) + ":" + std::to_string(minute) + ":" +
                      std::to_string(second));
  return {detail::days_from_civil(year, month, day) * kSecondsPerDay + hour * 3600 +
          minute * 60 + second};
}

/// Renders as "YYYY-MM-DDTHH:MM:SSZ".
inline std::string to_iso8601(UtcTime t) {
  std::int64_t days = t.seconds / kSecondsPerDay;
  std::int64_t rem = t.seconds % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  int y = 0, m = 0, d = 0;
  detail::civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

inline UtcTime parse_iso8601(std::string_view s) {
  // Accepts "YYYY-MM-DDTHH:MM:SSZ" (the trailing Z optional).
  if (s.size() == 20 && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':')
    throw FormatError("unparseable ISO-8601 timestamp: '" + std::string(s) + "'");
  int y, mo, d, h, mi, sec;
  if (!detail::parse_fixed_uint(s.substr(0, 4), y) ||
      !detail::parse_fixed_uint(s.substr(5, 2), mo) ||
      !detail::parse_fixed_uint(s.substr(8, 2), d) ||
      !detail::parse_fixed_uint(s.substr(11, 2), h) ||
      !detail::parse_fixed_uint(s.substr(14, 2), mi) ||
      !detail::parse_fixed_uint(s.substr(17, 2), sec))
    throw FormatError("unparseable ISO-8601 timestamp: '" + std::string(s) + "'");
  return make_utc(y, mo, d, h, mi, sec);
}

}  // namespace stormfit
