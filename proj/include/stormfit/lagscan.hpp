#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stormfit/csv.hpp"
#include "stormfit/errors.hpp"
#include "stormfit/implicit.hpp"
#include "stormfit/ingest.hpp"
#include "stormfit/linalg.hpp"
#include "stormfit/terms.hpp"

namespace stormfit {

struct LagEntry {
  int dt = 0;
  std::size_t n = 0;         ///< complete joined records fitted at this lag
  std::size_t excluded = 0;  ///< of those, records left out of the correlation (complex roots)
  std::optional<double> r_squared;
  std::optional<double> correlation;  ///< Pearson r between observed W and selected root
  bool skipped = false;
  std::string skip_reason;
};

struct LagScanResult {
  std::vector<LagEntry> entries;  ///< in dt order
  int best_lag = 0;               ///< maximum correlation; ties to the smaller dt
};

struct ScanConfig {
  int dt_first = 1;
  int dt_last = 36;
  std::int64_t join_tolerance_seconds = 90 * 60;
  std::string target = "W";
};

/// For each day lag: join, fit the unity model, invert per record, select the
/// root nearest the observed target, and correlate observed vs estimate.
/// Lags with too few records (or a degenerate fit) are marked skipped rather
/// than failing the scan; only an entirely skipped scan is an error.
inline LagScanResult scan(std::span<const StormReading> storms,
                          std::span<const BuoyReading> buoys,
                          std::span<const TermDescriptor> model_terms,
                          const ScanConfig& config = {}) {
  if (config.dt_first > config.dt_last)
    throw std::invalid_argument("scan: empty dt range");
  if (storms.empty() || buoys.empty())
    throw std::invalid_argument("scan: empty input data");

  LagScanResult result;
  for (int dt = config.dt_first; dt <= config.dt_last; ++dt) {
    LagEntry entry;
    entry.dt = dt;

    const JoinResult joined = join_lagged(storms, buoys, dt, config.join_tolerance_seconds);
    const CompleteCases complete = complete_cases(joined.records);
    entry.n = complete.records.size();
    if (entry.n <= model_terms.size()) {
      entry.skipped = true;
      entry.skip_reason = "insufficient records (" + std::to_string(entry.n) + " <= " +
                          std::to_string(model_terms.size()) + " terms)";
      result.entries.push_back(std::move(entry));
      continue;
    }

    std::vector<Observation> observations;
    std::vector<std::string> keys;
    observations.reserve(complete.records.size());
    for (const auto& r : complete.records) {
      observations.push_back(to_observation(r));
      keys.push_back(row_key(r));
    }

    try {
      const DesignMatrix design = evaluate(model_terms, observations, std::move(keys));
      const ImplicitModel model = fit_unity(design);
      entry.r_squared = model.r_squared;

      std::vector<double> observed;
      std::vector<double> estimated;
      for (const auto& obs : observations) {
        Observation others = obs;
        const double truth = others.at(config.target);
        others.erase(config.target);
        const QuadraticBounds bounds = quadratic_in(model, config.target, others);
        if (bounds.status == RootStatus::complex_roots) {
          ++entry.excluded;
          continue;
        }
        observed.push_back(truth);
        estimated.push_back(select_root(bounds, truth));
      }
      entry.correlation = pearson(observed, estimated);
    } catch (const NumericsError& e) {
      entry.skipped = true;
      entry.skip_reason = e.what();
      entry.r_squared.reset();
      entry.correlation.reset();
    } catch (const std::invalid_argument& e) {
      entry.skipped = true;
      entry.skip_reason = e.what();
    }
    result.entries.push_back(std::move(entry));
  }

  bool any = false;
  double best = 0.0;
  for (const auto& entry : result.entries) {
    if (!entry.correlation) continue;
    if (!any || *entry.correlation > best) {
      any = true;
      best = *entry.correlation;
      result.best_lag = entry.dt;
    }
  }
  if (!any) throw NumericsError("scan: every lag was skipped; insufficient data");
  return result;
}

inline void correlation_curve_csv(const LagScanResult& result, std::ostream& os) {
  write_csv_row(os, {"dt", "n", "excluded", "r_squared", "correlation", "skipped"});
  for (const auto& e : result.entries) {
    write_csv_row(os, {std::to_string(e.dt), std::to_string(e.n), std::to_string(e.excluded),
                       e.r_squared ? format_double(*e.r_squared) : "",
                       e.correlation ? format_double(*e.correlation) : "",
                       e.skipped ? "1" : "0"});
  }
}

}  // namespace stormfit
