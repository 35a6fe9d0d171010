#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stormfit/errors.hpp"
#include "stormfit/factor.hpp"
#include "stormfit/ingest.hpp"

namespace stormfit {

/// Mean buoy conditions among all readings sharing one exact storm wind value.
struct WindBinSummary {
  double wind = 0.0;
  std::size_t n = 0;
  double mean_w = 0.0;
  double mean_p = 0.0;
  double mean_a = 0.0;
  double mean_t = 0.0;
};

struct BinnedMeans {
  std::vector<WindBinSummary> bins;  ///< ascending by wind
  std::vector<std::string> lints;    ///< winds that are not multiples of 5
};

inline BinnedMeans bin_means(std::span<const JoinedRecord> records) {
  BinnedMeans out;
  std::map<double, WindBinSummary> groups;
  for (const auto& r : records) {
    if (!r.complete())
      throw std::invalid_argument("bin_means: record " + row_key(r) + " is not complete-case");
    auto& bin = groups[r.storm.wind];
    if (bin.n == 0) bin.wind = r.storm.wind;
    ++bin.n;
    bin.mean_w += *r.buoy.wind;
    bin.mean_p += *r.buoy.pressure;
    bin.mean_a += *r.buoy.air_temp;
    bin.mean_t += *r.buoy.water_temp;
    if (std::fmod(r.storm.wind, 5.0) != 0.0 && bin.n == 1)
      out.lints.push_back("wind " + format_double(r.storm.wind) + " kt is not a multiple of 5");
  }
  for (auto& [wind, bin] : groups) {
    const double n = static_cast<double>(bin.n);
    bin.mean_w /= n;
    bin.mean_p /= n;
    bin.mean_a /= n;
    bin.mean_t /= n;
    out.bins.push_back(bin);
  }
  return out;
}

struct VariabilityEntry {
  std::string variable;
  double constancy = 0.0;
};

/// Constancy index of each per-bin mean series (w-bar, p-bar, a-bar, t-bar),
/// ranked most-constant first.
inline std::vector<VariabilityEntry> variability_report(
    std::span<const WindBinSummary> summaries) {
  if (summaries.size() < 2)
    throw std::invalid_argument("variability_report: need at least 2 bins");
  std::vector<double> w, p, a, t;
  for (const auto& bin : summaries) {
    w.push_back(bin.mean_w);
    p.push_back(bin.mean_p);
    a.push_back(bin.mean_a);
    t.push_back(bin.mean_t);
  }
  std::vector<VariabilityEntry> out = {{"w", constancy_index(w)},
                                       {"p", constancy_index(p)},
                                       {"a", constancy_index(a)},
                                       {"t", constancy_index(t)}};
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.constancy > y.constancy;
  });
  return out;
}

inline void write_bins_csv(std::span<const WindBinSummary> bins, std::ostream& os) {
  write_csv_row(os, {"wind", "n", "mean_w", "mean_p", "mean_a", "mean_t"});
  for (const auto& b : bins) {
    write_csv_row(os, {format_double(b.wind), std::to_string(b.n), format_double(b.mean_w),
                       format_double(b.mean_p), format_double(b.mean_a),
                       format_double(b.mean_t)});
  }
}

}  // namespace stormfit
