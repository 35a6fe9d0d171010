#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stormfit/csv.hpp"
#include "stormfit/errors.hpp"
#include "stormfit/numeric.hpp"
#include "stormfit/time.hpp"

namespace stormfit {

/// One 3-hourly best-track observation.
struct StormReading {
  UtcTime timestamp;
  std::string storm_id;    // e.g. "AL122005"
  std::string storm_name;  // e.g. "KATRINA"
  double lat = 0.0;        // degrees north
  double lon = 0.0;        // degrees east, west negative
  double wind = 0.0;       // knots
  std::optional<double> pressure;  // millibars

  bool operator==(const StormReading&) const = default;
};

/// One buoy observation. Every variable may independently be missing; the
/// source format's 99/999/9999 sentinels never survive into these fields.
struct BuoyReading {
  UtcTime timestamp;
  std::string station_id;
  std::optional<double> wind;        // source-native units
  std::optional<double> pressure;    // millibars
  std::optional<double> air_temp;    // degrees C
  std::optional<double> water_temp;  // degrees C

  bool operator==(const BuoyReading&) const = default;
};

struct JoinedRecord {
  StormReading storm;
  BuoyReading buoy;
  int lag_days = 0;

  bool complete() const {
    return storm.pressure && buoy.wind && buoy.pressure && buoy.air_temp && buoy.water_temp;
  }
};

enum class IssueSeverity { error, lint };

struct ParseIssue {
  std::size_t line = 0;
  IssueSeverity severity = IssueSeverity::error;
  std::string message;
};

struct BestTrackParse {
  std::vector<StormReading> readings;
  std::vector<ParseIssue> issues;
};

struct BuoyParse {
  std::vector<BuoyReading> readings;
  std::vector<ParseIssue> issues;
  /// Units as declared by the file's second '#' line, keyed by column name
  /// (only the variable columns are kept). Empty when the file has no units
  /// line; values are recorded as found, never converted.
  std::map<std::string, std::string> units;
};

namespace detail {

inline std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.emplace_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline bool is_atcf_id(std::string_view s) {
  if (s.size() != 8) return false;
  return std::isalpha(static_cast<unsigned char>(s[0])) &&
         std::isalpha(static_cast<unsigned char>(s[1])) &&
         std::all_of(s.begin() + 2, s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

inline std::optional<double> parse_hemisphere(std::string_view field, char pos, char neg) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  double sign = 1.0;
  const char suffix = field.back();
  if (suffix == pos || suffix == std::tolower(pos)) {
    field.remove_suffix(1);
  } else if (suffix == neg || suffix == std::tolower(neg)) {
    sign = -1.0;
    field.remove_suffix(1);
  }
  const auto v = parse_double(trim(field));
  if (!v) return std::nullopt;
  return sign * *v;
}

}  // namespace detail

/// Parses best-track text: a storm header line (ATCF id, name, row count)
/// followed by fixed-field observation rows
///   YYYYMMDD, HHMM, <id>, <status>, 28.0N, 94.8W, <wind kt>, <pressure mb>, ...
/// Pressure -999 means missing. Malformed rows are reported with their line
/// number in the issue list, never silently dropped.
inline BestTrackParse parse_best_track(std::istream& in) {
  BestTrackParse out;
  std::string line;
  std::size_t line_no = 0;
  std::string storm_id;
  std::string storm_name;
  bool saw_header = false;

  auto row_error = [&](std::size_t n, std::string msg) {
    out.issues.push_back({n, IssueSeverity::error, std::move(msg)});
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view stripped = trim(line);
    if (stripped.empty()) continue;
    const auto fields = detail::split_commas(stripped);

    if (detail::is_atcf_id(fields[0])) {
      if (fields.size() < 2 || trim(fields[1]).empty())
        throw FormatError("line " + std::to_string(line_no) +
                          ": storm header missing name field");
      storm_id = fields[0];
      storm_name = fields[1];
      saw_header = true;
      continue;
    }

    if (!saw_header)
      throw FormatError("line " + std::to_string(line_no) +
                        ": observation row before any storm header");
    if (fields.size() < 8) {
      row_error(line_no, "expected at least 8 fields, got " + std::to_string(fields.size()));
      continue;
    }

    const auto date = parse_int(fields[0]);
    const auto time = parse_int(fields[1]);
    if (!date || !time || fields[0].size() != 8 || fields[1].size() != 4) {
      row_error(line_no, "bad date/time fields '" + fields[0] + "', '" + fields[1] + "'");
      continue;
    }
    StormReading r;
    try {
      r.timestamp = make_utc(static_cast<int>(*date / 10000), static_cast<int>(*date / 100 % 100),
                             static_cast<int>(*date % 100), static_cast<int>(*time / 100),
                             static_cast<int>(*time % 100));
    } catch (const FormatError& e) {
      row_error(line_no, e.what());
      continue;
    }
    r.storm_id = storm_id;
    r.storm_name = storm_name;

    const auto lat = detail::parse_hemisphere(fields[4], 'N', 'S');
    const auto lon = detail::parse_hemisphere(fields[5], 'E', 'W');
    if (!lat || !lon) {
      row_error(line_no, "bad position fields '" + fields[4] + "', '" + fields[5] + "'");
      continue;
    }
    if (*lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) {
      row_error(line_no, "position out of range: lat " + fields[4] + ", lon " + fields[5]);
      continue;
    }
    r.lat = *lat;
    r.lon = *lon;

    const auto wind = parse_double(fields[6]);
    if (!wind || *wind < 0.0) {
      row_error(line_no, "missing or negative wind field '" + fields[6] + "'");
      continue;
    }
    r.wind = *wind;
    if (std::fmod(*wind, 5.0) != 0.0)
      out.issues.push_back({line_no, IssueSeverity::lint,
                            "wind " + fields[6] + " kt is not a multiple of 5"});

    const auto pressure = parse_double(fields[7]);
    if (!pressure) {
      row_error(line_no, "unparseable pressure field '" + fields[7] + "'");
      continue;
    }
    if (*pressure == -999.0) {
      r.pressure = std::nullopt;
    } else if (*pressure <= 800.0 || *pressure >= 1100.0) {
      row_error(line_no, "pressure out of range: " + fields[7] + " mb");
      continue;
    } else {
      r.pressure = *pressure;
    }

    out.readings.push_back(std::move(r));
  }
  return out;
}

/// Parses NDBC-style standard meteorological text. The first line must be a
/// '#'-prefixed header naming the columns; a second '#' line (units) is
/// skipped. Column positions come from the header, never assumed. Missing
/// sentinels per column: WSPD 99.0, PRES/BAR 9999.0, ATMP/WTMP 999.0.
inline BuoyParse parse_buoy_stdmet(std::istream& in, std::string station_id) {
  std::string line;
  std::size_t line_no = 0;

  // Header line.
  std::string header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = trim(line);
      break;
    }
  }
  if (header.empty()) throw FormatError("buoy file has no header line");
  if (header.front() != '#')
    throw FormatError("line " + std::to_string(line_no) +
                      ": expected '#'-prefixed column header, got '" + header + "'");
  header.erase(header.begin());

  std::vector<std::string> columns;
  {
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) columns.push_back(tok);
  }
  auto find_col = [&](std::initializer_list<std::string_view> candidates)
      -> std::optional<std::size_t> {
    for (const auto want : candidates)
      for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == want) return i;
    return std::nullopt;
  };
  auto require_col = [&](std::initializer_list<std::string_view> candidates,
                         std::string_view what) {
    const auto idx = find_col(candidates);
    if (!idx)
      throw FormatError("buoy header is missing required column " + std::string(what));
    return *idx;
  };

  const std::size_t col_year = require_col({"YY", "YYYY"}, "YY/YYYY (year)");
  const std::size_t col_month = require_col({"MM"}, "MM (month)");
  const std::size_t col_day = require_col({"DD"}, "DD (day)");
  const std::size_t col_hour = require_col({"hh"}, "hh (hour)");
  const auto col_minute = find_col({"mm"});
  const std::size_t col_wind = require_col({"WSPD"}, "WSPD (wind speed)");
  const std::size_t col_pressure = require_col({"PRES", "BAR"}, "PRES/BAR (pressure)");
  const std::size_t col_air = require_col({"ATMP"}, "ATMP (air temperature)");
  const std::size_t col_water = require_col({"WTMP"}, "WTMP (water temperature)");

  BuoyParse out;
  auto row_error = [&](std::size_t n, std::string msg) {
    out.issues.push_back({n, IssueSeverity::error, std::move(msg)});
  };

  auto variable = [&](const std::vector<std::string>& tokens, std::size_t col,
                      double sentinel) -> std::optional<double> {
    const auto v = parse_double(tokens[col]);
    if (!v) throw FormatError("unparseable value '" + tokens[col] + "'");
    if (*v == sentinel) return std::nullopt;
    return *v;
  };

  bool units_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped.front() == '#') {
      // first comment after the header is the units line, aligned by column
      if (!units_seen) {
        units_seen = true;
        std::istringstream us{std::string(stripped.substr(1))};
        std::vector<std::string> unit_tokens;
        std::string tok;
        while (us >> tok) unit_tokens.push_back(tok);
        for (const std::size_t col : {col_wind, col_pressure, col_air, col_water})
          if (col < unit_tokens.size()) out.units[columns[col]] = unit_tokens[col];
      }
      continue;
    }

    std::vector<std::string> tokens;
    {
      std::istringstream ls{std::string(stripped)};
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
    }
    if (tokens.size() < columns.size()) {
      row_error(line_no, "expected " + std::to_string(columns.size()) + " fields, got " +
                             std::to_string(tokens.size()));
      continue;
    }

    const auto year = parse_int(tokens[col_year]);
    const auto month = parse_int(tokens[col_month]);
    const auto day = parse_int(tokens[col_day]);
    const auto hour = parse_int(tokens[col_hour]);
    const auto minute = col_minute ? parse_int(tokens[*col_minute]) : std::optional<long long>{0};
    if (!year || !month || !day || !hour || !minute) {
      row_error(line_no, "bad date/time fields");
      continue;
    }
    long long y = *year;
    if (y < 100) y += (y < 50) ? 2000 : 1900;  // NDBC two-digit year convention

    BuoyReading r;
    r.station_id = station_id;
    try {
      r.timestamp = make_utc(static_cast<int>(y), static_cast<int>(*month),
                             static_cast<int>(*day), static_cast<int>(*hour),
                             static_cast<int>(*minute));
      r.wind = variable(tokens, col_wind, 99.0);
      r.pressure = variable(tokens, col_pressure, 9999.0);
      r.air_temp = variable(tokens, col_air, 999.0);
      r.water_temp = variable(tokens, col_water, 999.0);
    } catch (const FormatError& e) {
      row_error(line_no, e.what());
      continue;
    }
    out.readings.push_back(std::move(r));
  }
  return out;
}

struct JoinResult {
  std::vector<JoinedRecord> records;
  std::size_t dropped_no_match = 0;
};

/// Attaches to each storm reading the buoy reading nearest to
/// (storm time - dt days), within `tolerance_seconds`. Equidistant candidates
/// resolve to the earlier timestamp. Output is sorted by storm timestamp;
/// storm readings with no in-window buoy reading are counted, not errored.
inline JoinResult join_lagged(std::span<const StormReading> storms,
                              std::span<const BuoyReading> buoys, int dt_days,
                              std::int64_t tolerance_seconds) {
  if (dt_days < 0) throw std::invalid_argument("join_lagged: dt must be >= 0");
  if (tolerance_seconds <= 0) throw std::invalid_argument("join_lagged: tolerance must be > 0");

  std::vector<const BuoyReading*> by_time;
  by_time.reserve(buoys.size());
  for (const auto& b : buoys) by_time.push_back(&b);
  std::stable_sort(by_time.begin(), by_time.end(),
                   [](const BuoyReading* a, const BuoyReading* b) {
                     return a->timestamp < b->timestamp;
                   });

  std::vector<const StormReading*> storm_order;
  storm_order.reserve(storms.size());
  for (const auto& s : storms) storm_order.push_back(&s);
  std::stable_sort(storm_order.begin(), storm_order.end(),
                   [](const StormReading* a, const StormReading* b) {
                     return a->timestamp < b->timestamp;
                   });

  JoinResult out;
  for (const StormReading* s : storm_order) {
    const UtcTime target = s->timestamp - std::int64_t{dt_days} * kSecondsPerDay;
    const auto it = std::lower_bound(by_time.begin(), by_time.end(), target,
                                     [](const BuoyReading* b, UtcTime t) {
                                       return b->timestamp < t;
                                     });
    const BuoyReading* best = nullptr;
    std::int64_t best_dist = 0;
    auto consider = [&](const BuoyReading* cand) {
      const std::int64_t dist = std::abs(cand->timestamp - target);
      if (!best || dist < best_dist || (dist == best_dist && cand->timestamp < best->timestamp)) {
        best = cand;
        best_dist = dist;
      }
    };
    if (it != by_time.end()) consider(*it);
    if (it != by_time.begin()) consider(*(it - 1));

    if (best && best_dist <= tolerance_seconds) {
      out.records.push_back({*s, *best, dt_days});
    } else {
      ++out.dropped_no_match;
    }
  }
  return out;
}

struct CompleteCases {
  std::vector<JoinedRecord> records;
  std::size_t dropped_incomplete = 0;
};

/// Complete-case filter: keeps only records with all six of W, P, w, p, a, t.
inline CompleteCases complete_cases(std::span<const JoinedRecord> records) {
  CompleteCases out;
  for (const auto& r : records) {
    if (r.complete())
      out.records.push_back(r);
    else
      ++out.dropped_incomplete;
  }
  return out;
}

/// Variable values of one complete joined record, keyed by the model's
/// conventional names.
inline std::map<std::string, double> to_observation(const JoinedRecord& r) {
  if (!r.complete())
    throw Error("to_observation: record " + r.storm.storm_id + "@" +
                to_iso8601(r.storm.timestamp) + " is not complete-case");
  return {{"W", r.storm.wind},        {"P", *r.storm.pressure}, {"w", *r.buoy.wind},
          {"p", *r.buoy.pressure},    {"a", *r.buoy.air_temp},  {"t", *r.buoy.water_temp}};
}

inline std::string row_key(const JoinedRecord& r) {
  return r.storm.storm_id + "@" + to_iso8601(r.storm.timestamp);
}

// --- canonical CSV (fixed column order, missing rendered as empty) ---

inline void write_storm_csv(std::span<const StormReading> readings, std::ostream& os) {
  write_csv_row(os, {"timestamp", "storm_id", "name", "lat", "lon", "W", "P"});
  for (const auto& r : readings) {
    write_csv_row(os, {to_iso8601(r.timestamp), r.storm_id, r.storm_name, format_double(r.lat),
                       format_double(r.lon), format_double(r.wind),
                       r.pressure ? format_double(*r.pressure) : ""});
  }
}

inline void write_buoy_csv(std::span<const BuoyReading> readings, std::ostream& os) {
  write_csv_row(os, {"timestamp", "station", "w", "p", "a", "t"});
  for (const auto& r : readings) {
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : ""; };
    write_csv_row(os, {to_iso8601(r.timestamp), r.station_id, opt(r.wind), opt(r.pressure),
                       opt(r.air_temp), opt(r.water_temp)});
  }
}

inline std::vector<StormReading> read_storm_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("storm csv: empty input");
  const auto header = split_csv_row(trim(line));
  const std::vector<std::string> expected = {"timestamp", "storm_id", "name",
                                             "lat",       "lon",      "W",
                                             "P"};
  if (header != expected) throw FormatError("storm csv: unexpected header");

  std::vector<StormReading> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_row(trim(line));
    if (f.size() != 7)
      throw FormatError("storm csv line " + std::to_string(line_no) + ": expected 7 fields");
    StormReading r;
    r.timestamp = parse_iso8601(f[0]);
    r.storm_id = f[1];
    r.storm_name = f[2];
    auto num = [&](const std::string& s, const char* what) {
      const auto v = parse_double(s);
      if (!v)
        throw FormatError("storm csv line " + std::to_string(line_no) + ": bad " +
                          std::string(what));
      return *v;
    };
    r.lat = num(f[3], "lat");
    r.lon = num(f[4], "lon");
    r.wind = num(f[5], "W");
    r.pressure = f[6].empty() ? std::optional<double>{} : std::optional<double>{num(f[6], "P")};
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<BuoyReading> read_buoy_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("buoy csv: empty input");
  const auto header = split_csv_row(trim(line));
  const std::vector<std::string> expected = {"timestamp", "station", "w", "p", "a", "t"};
  if (header != expected) throw FormatError("buoy csv: unexpected header");

  std::vector<BuoyReading> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_row(trim(line));
    if (f.size() != 6)
      throw FormatError("buoy csv line " + std::to_string(line_no) + ": expected 6 fields");
    BuoyReading r;
    r.timestamp = parse_iso8601(f[0]);
    r.station_id = f[1];
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      const auto v = parse_double(s);
      if (!v) throw FormatError("buoy csv line " + std::to_string(line_no) + ": bad number");
      return v;
    };
    r.wind = opt(f[2]);
    r.pressure = opt(f[3]);
    r.air_temp = opt(f[4]);
    r.water_temp = opt(f[5]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace stormfit
