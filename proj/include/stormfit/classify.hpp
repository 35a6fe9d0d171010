#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stormfit/errors.hpp"
#include "stormfit/ingest.hpp"

namespace stormfit {

/// A wind-threshold categorization table. The first category covers every
/// wind below the second minimum; lower bounds are inclusive.
struct CategoryScale {
  struct Threshold {
    std::string label;
    double min_wind = 0.0;  // knots
  };

  std::string name;
  std::vector<Threshold> thresholds;  ///< strictly increasing minimums

  void validate() const {
    if (thresholds.empty()) throw Error("category scale: no thresholds");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
      if (thresholds[i].min_wind <= thresholds[i - 1].min_wind)
        throw Error("category scale: minimums must be strictly increasing");
  }

  const std::string& category_of(double wind) const {
    std::size_t best = 0;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (wind >= thresholds[i].min_wind) best = i;
    return thresholds[best].label;
  }

  /// Conventional wind thresholds, shipped as a stand-in configuration; the
  /// scale is a config table precisely so it can be swapped out.
  static CategoryScale default_scale() {
    return {"wind-threshold-standin",
            {{"tropical storm", 0.0},
             {"category 1", 64.0},
             {"category 2", 83.0},
             {"category 3", 96.0},
             {"category 4", 113.0},
             {"category 5", 137.0}}};
  }

  static CategoryScale from_json(const nlohmann::json& j) {
    CategoryScale scale;
    try {
      scale.name = j.at("name").get<std::string>();
      for (const auto& entry : j.at("categories")) {
        scale.thresholds.push_back(
            {entry.at("label").get<std::string>(), entry.at("min_wind").get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("scale json: ") + e.what());
    }
    scale.validate();
    return scale;
  }

  nlohmann::json to_json() const {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& t : thresholds) cats.push_back({{"label", t.label}, {"min_wind", t.min_wind}});
    return {{"name", name}, {"categories", cats}};
  }
};

/// Category of a storm by the maximum wind over its readings.
inline std::string classify_storm(std::span<const StormReading> readings,
                                  const CategoryScale& scale) {
  if (readings.empty()) throw std::invalid_argument("classify_storm: no readings");
  scale.validate();
  double max_wind = readings.front().wind;
  for (const auto& r : readings) max_wind = std::max(max_wind, r.wind);
  return scale.category_of(max_wind);
}

struct StormSummary {
  std::size_t n_storms = 0;
  std::size_t n_readings = 0;
  std::vector<std::pair<std::string, std::size_t>> category_counts;  ///< scale order
  double mean_wind = 0.0;
  double mode_wind = 0.0;  ///< ties break toward the smaller wind
  std::map<double, std::size_t> wind_counts;  ///< per-reading histogram data
};

inline StormSummary summarize(std::span<const StormReading> readings,
                              const CategoryScale& scale) {
  if (readings.empty()) throw std::invalid_argument("summarize: empty dataset");
  scale.validate();

  StormSummary summary;
  summary.n_readings = readings.size();

  std::map<std::string, double> max_wind_by_storm;
  double wind_sum = 0.0;
  for (const auto& r : readings) {
    auto [it, inserted] = max_wind_by_storm.try_emplace(r.storm_id, r.wind);
    if (!inserted) it->second = std::max(it->second, r.wind);
    wind_sum += r.wind;
    ++summary.wind_counts[r.wind];
  }
  summary.n_storms = max_wind_by_storm.size();
  summary.mean_wind = wind_sum / static_cast<double>(readings.size());

  std::size_t best_count = 0;
  for (const auto& [wind, count] : summary.wind_counts) {
    if (count > best_count) {  // map iterates ascending, so ties keep the smaller wind
      best_count = count;
      summary.mode_wind = wind;
    }
  }

  for (const auto& t : scale.thresholds) summary.category_counts.emplace_back(t.label, 0);
  for (const auto& [storm_id, max_wind] : max_wind_by_storm) {
    const std::string& label = scale.category_of(max_wind);
    for (auto& [cat, count] : summary.category_counts)
      if (cat == label) ++count;
  }
  return summary;
}

inline nlohmann::json to_json(const StormSummary& s) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& [label, count] : s.category_counts)
    cats.push_back({{"category", label}, {"storms", count}});
  nlohmann::json winds = nlohmann::json::array();
  for (const auto& [wind, count] : s.wind_counts)
    winds.push_back({{"wind", wind}, {"readings", count}});
  return {{"n_storms", s.n_storms},   {"n_readings", s.n_readings},
          {"categories", cats},       {"mean_wind", s.mean_wind},
          {"mode_wind", s.mode_wind}, {"wind_histogram", winds}};
}

}  // namespace stormfit
