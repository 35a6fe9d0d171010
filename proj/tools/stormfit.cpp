// stormfit: batch pipeline over best-track and buoy data — term expansion,
// factor extraction, unity-response fits, quadratic wind bounds, day-lag
// scans, wind-bin summaries and conic slices, all emitted as CSV/JSON.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stormfit/stormfit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stormfit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerics = 3;

// ---------------------------------------------------------------------------
// shared option bundles

struct IoArgs {
  std::string output_dir = ".";
};

struct DataArgs {
  std::string storms_path;
  std::string buoys_path;
  std::string station = "buoy";
  int dt = 0;
  double tolerance_min = 90.0;
};

struct ModelTermArgs {
  std::string preset;
  std::string terms_csv;
  std::string variables_csv = "W,P,w,p,a,t";
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct ModelSpec {
  std::vector<std::string> variables;
  std::vector<TermDescriptor> terms;
};

ModelSpec resolve_terms(const ModelTermArgs& args) {
  ModelSpec spec;
  if (!args.preset.empty() && !args.terms_csv.empty())
    throw Error("--preset and --terms are mutually exclusive");
  if (args.preset.empty() && args.terms_csv.empty())
    throw Error("one of --preset or --terms is required");

  std::vector<std::string> names;
  if (args.preset == "factor1-wind") {
    spec.variables = {"W", "P", "w", "p", "a", "t"};
    names = {"W", "P", "W^2", "P^2", "Ww", "Wp", "Wa", "Wt", "WP", "Pp"};
  } else if (args.preset == "buoy-6term") {
    spec.variables = {"p", "a", "t"};
    names = {"p", "a", "t", "p^2", "a^2", "t^2"};
  } else if (args.preset == "buoy-14term") {
    spec.variables = {"w", "p", "a", "t"};
    names = {"w",   "p",  "a",  "t",  "w^2", "p^2", "a^2",
             "t^2", "wp", "wa", "wt", "pa",  "pt",  "at"};
  } else if (!args.preset.empty()) {
    throw Error("unknown preset '" + args.preset +
                "' (expected factor1-wind, buoy-6term or buoy-14term)");
  } else {
    spec.variables = split_list(args.variables_csv);
    names = split_list(args.terms_csv);
    if (names.empty()) throw Error("--terms is empty");
  }
  for (const auto& name : names) spec.terms.push_back(parse_term_name(name, spec.variables));
  return spec;
}

// ---------------------------------------------------------------------------
// io helpers

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open output file: " + path.string());
  return out;
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  return to_iso8601(
      UtcTime{std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()});
}

/// Collects everything a run must report: inputs with digests, counts, and
/// the produced file names. Serialized as run_manifest.json last.
class Manifest {
 public:
  Manifest(std::string command, const IoArgs& io) : command_(std::move(command)), io_(io) {
    fs::create_directories(io_.output_dir);
  }

  fs::path out_dir() const { return io_.output_dir; }

  void config(const std::string& key, const json& value) { config_[key] = value; }

  void input(const std::string& path) {
    try {
      inputs_.push_back({{"path", path},
                         {"sha256", sha256_file_hex(path)},
                         {"bytes", fs::file_size(path)}});
    } catch (const std::exception&) {
      throw FormatError("cannot read input file: " + path);
    }
  }

  void count(const std::string& key, const json& value) { counts_[key] = value; }

  std::ofstream create(const std::string& filename) {
    outputs_.push_back(filename);
    return open_output(out_dir() / filename);
  }

  void write() {
    json j;
    j["command"] = command_;
    j["config"] = config_;
    j["inputs"] = inputs_;
    j["counts"] = counts_;
    j["outputs"] = outputs_;
    j["timestamp"] = now_iso8601();
    auto out = open_output(out_dir() / "run_manifest.json");
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  IoArgs io_;
  json config_ = json::object();
  json inputs_ = json::array();
  json counts_ = json::object();
  std::vector<std::string> outputs_;
};

void write_issues_csv(std::ostream& os,
                      const std::vector<std::pair<std::string, ParseIssue>>& issues) {
  write_csv_row(os, {"file", "line", "severity", "message"});
  for (const auto& [file, issue] : issues) {
    write_csv_row(os, {file, std::to_string(issue.line),
                       issue.severity == IssueSeverity::lint ? "lint" : "error",
                       issue.message});
  }
}

struct LoadedData {
  std::vector<StormReading> storms;
  std::vector<BuoyReading> buoys;
  std::vector<std::pair<std::string, ParseIssue>> issues;
  std::map<std::string, std::string> buoy_units;
};

LoadedData load_inputs(const DataArgs& args, Manifest& manifest, bool need_storms,
                       bool need_buoys) {
  LoadedData data;
  if (need_storms && args.storms_path.empty()) throw Error("--storms is required");
  if (need_buoys && args.buoys_path.empty()) throw Error("--buoys is required");

  if (!args.storms_path.empty()) {
    manifest.input(args.storms_path);
    auto in = open_input(args.storms_path);
    auto parsed = parse_best_track(in);
    data.storms = std::move(parsed.readings);
    for (auto& issue : parsed.issues) data.issues.emplace_back(args.storms_path, issue);
  }
  if (!args.buoys_path.empty()) {
    manifest.input(args.buoys_path);
    auto in = open_input(args.buoys_path);
    auto parsed = parse_buoy_stdmet(in, args.station);
    data.buoys = std::move(parsed.readings);
    data.buoy_units = std::move(parsed.units);
    for (auto& issue : parsed.issues) data.issues.emplace_back(args.buoys_path, issue);
  }
  return data;
}

// Units are preserved as-found: storm fields are fixed by the best-track
// format, buoy units come from the file's units line when present.
json units_metadata(const LoadedData& data) {
  json j;
  j["storm"] = {{"W", "knots"}, {"P", "mb"}};
  json buoy = {{"w", "source-native"}, {"p", "source-native"},
               {"a", "source-native"}, {"t", "source-native"}};
  const std::map<std::string, std::string> to_var = {
      {"WSPD", "w"}, {"PRES", "p"}, {"BAR", "p"}, {"ATMP", "a"}, {"WTMP", "t"}};
  for (const auto& [column, unit] : data.buoy_units) {
    const auto it = to_var.find(column);
    if (it != to_var.end()) buoy[it->second] = unit;
  }
  j["buoy"] = buoy;
  return j;
}

struct JoinedData {
  std::vector<JoinedRecord> records;  // complete cases only
  std::vector<Observation> observations;
  std::vector<std::string> keys;
};

JoinedData join_pipeline(const LoadedData& data, const DataArgs& args, Manifest& manifest) {
  const auto joined = join_lagged(data.storms, data.buoys, args.dt,
                                  static_cast<std::int64_t>(args.tolerance_min * 60.0));
  const auto complete = complete_cases(joined.records);
  manifest.count("joined_records", joined.records.size());
  manifest.count("dropped_no_match", joined.dropped_no_match);
  manifest.count("dropped_incomplete", complete.dropped_incomplete);
  manifest.count("complete_records", complete.records.size());

  JoinedData out;
  out.records = complete.records;
  for (const auto& r : out.records) {
    out.observations.push_back(to_observation(r));
    out.keys.push_back(row_key(r));
  }
  return out;
}

void record_data_config(Manifest& manifest, const DataArgs& args, bool with_dt = true) {
  manifest.config("storms", args.storms_path);
  manifest.config("buoys", args.buoys_path);
  manifest.config("station", args.station);
  if (with_dt) manifest.config("dt", args.dt);
  manifest.config("tolerance_min", args.tolerance_min);
}

ImplicitModel load_model(const std::string& path, Manifest& manifest) {
  if (path.empty()) throw Error("--model is required");
  manifest.input(path);
  auto in = open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("model json '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

Observation parse_fixed(const std::vector<std::string>& pairs) {
  Observation fixed;
  for (const auto& pair : pairs) {
    const auto eq = pair.find('=');
    const auto value = eq == std::string::npos
                           ? std::nullopt
                           : parse_double(std::string_view(pair).substr(eq + 1));
    if (eq == std::string::npos || eq == 0 || !value)
      throw Error("bad --fix entry '" + pair + "' (expected name=value)");
    fixed[pair.substr(0, eq)] = *value;
  }
  return fixed;
}

/// Fills any model variable that is neither sliced nor fixed with its mean
/// over the complete-case joined dataset.
void fill_fixed_from_means(const ImplicitModel& model, const std::string& var_x,
                           const std::string& var_y, Observation& fixed,
                           const JoinedData* joined, json& from_means) {
  std::vector<std::string> unfixed;
  for (const auto& v : model.variables) {
    if (v == var_x || v == var_y || fixed.count(v)) continue;
    unfixed.push_back(v);
  }
  if (unfixed.empty()) return;

  std::string list;
  for (const auto& v : unfixed) list += (list.empty() ? "" : ", ") + v;
  if (!joined)
    throw Error("variables left unfixed (" + list +
                "); pass --fix or provide --storms/--buoys/--dt so dataset means can be used");
  if (joined->observations.empty()) throw NumericsError("no complete records to average");

  for (const auto& v : unfixed) {
    double sum = 0.0;
    for (const auto& obs : joined->observations) {
      const auto it = obs.find(v);
      if (it == obs.end()) throw Error("variable '" + v + "' absent from the joined data");
      sum += it->second;
    }
    const double mean = sum / static_cast<double>(joined->observations.size());
    fixed[v] = mean;
    from_means[v] = mean;
  }
}

/// Loads and joins the dataset when both input paths were given.
std::optional<JoinedData> maybe_join(const DataArgs& data_args, Manifest& manifest) {
  if (data_args.storms_path.empty() || data_args.buoys_path.empty()) return std::nullopt;
  const LoadedData data = load_inputs(data_args, manifest, true, true);
  return join_pipeline(data, data_args, manifest);
}

// ---------------------------------------------------------------------------
// subcommands

void cmd_ingest(const DataArgs& data_args, const IoArgs& io) {
  Manifest manifest("ingest", io);
  record_data_config(manifest, data_args, false);
  if (data_args.storms_path.empty() && data_args.buoys_path.empty())
    throw Error("ingest needs --storms and/or --buoys");

  const LoadedData data = load_inputs(data_args, manifest, false, false);
  if (!data_args.storms_path.empty()) {
    auto out = manifest.create("storms.csv");
    write_storm_csv(data.storms, out);
    manifest.count("storm_readings", data.storms.size());
  }
  if (!data_args.buoys_path.empty()) {
    auto out = manifest.create("buoys.csv");
    write_buoy_csv(data.buoys, out);
    manifest.count("buoy_readings", data.buoys.size());
  }
  auto issues = manifest.create("issues.csv");
  write_issues_csv(issues, data.issues);
  manifest.count("issues", data.issues.size());
  manifest.count("units", units_metadata(data));
  manifest.write();
}

void cmd_stats(const DataArgs& data_args, const std::string& scale_path, const IoArgs& io) {
  Manifest manifest("stats", io);
  record_data_config(manifest, data_args, false);
  manifest.config("scale", scale_path);

  CategoryScale scale = CategoryScale::default_scale();
  if (!scale_path.empty()) {
    manifest.input(scale_path);
    auto in = open_input(scale_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw FormatError("scale json: " + std::string(e.what()));
    }
    scale = CategoryScale::from_json(j);
  }

  const LoadedData data = load_inputs(data_args, manifest, true, false);
  if (data.storms.empty()) throw NumericsError("no storm readings parsed");
  const StormSummary summary = summarize(data.storms, scale);

  json j = to_json(summary);
  j["scale"] = scale.name;
  auto out = manifest.create("summary.json");
  out << j.dump(2) << '\n';

  manifest.count("n_storms", summary.n_storms);
  manifest.count("n_readings", summary.n_readings);
  manifest.write();
}

void cmd_pca(const DataArgs& data_args, std::size_t n_factors, const std::string& rotation,
             const IoArgs& io) {
  Manifest manifest("pca", io);
  record_data_config(manifest, data_args);
  manifest.config("factors", n_factors);
  manifest.config("rotation", rotation);

  if (rotation != "none" && rotation != "varimax")
    throw Error("--rotation must be none or varimax");
  const Rotation rot = rotation == "none" ? Rotation::none : Rotation::varimax;

  const LoadedData data = load_inputs(data_args, manifest, true, true);
  const JoinedData joined = join_pipeline(data, data_args, manifest);
  if (joined.observations.empty()) throw NumericsError("no complete joined records");

  const std::vector<std::string> vars = {"W", "P", "w", "p", "a", "t"};
  const auto terms = expand_terms(vars);
  const DesignMatrix design = evaluate(terms, joined.observations, joined.keys);
  const FactorModel model = extract_factors(design, n_factors, rot);
  manifest.count("terms", terms.size());
  manifest.count("retained_factors", model.retained);

  const std::size_t f = model.ss_loadings.size();
  auto factor_header = [&](std::vector<std::string> head) {
    for (std::size_t j = 0; j < f; ++j) head.push_back("factor" + std::to_string(j + 1));
    return head;
  };

  {
    auto out = manifest.create("loadings.csv");
    write_csv_row(out, factor_header({"term"}));
    for (std::size_t i = 0; i < model.term_names.size(); ++i) {
      std::vector<std::string> row = {model.term_names[i]};
      for (std::size_t j = 0; j < f; ++j) row.push_back(format_double(model.loadings(i, j)));
      write_csv_row(out, row);
    }
  }
  {
    auto out = manifest.create("factor_summary.csv");
    write_csv_row(out, {"factor", "ss_loading", "proportion_variance", "cumulative_variance"});
    for (std::size_t j = 0; j < f; ++j) {
      write_csv_row(out, {"factor" + std::to_string(j + 1), format_double(model.ss_loadings[j]),
                          format_double(model.proportion_variance[j]),
                          format_double(model.cumulative_variance[j])});
    }
  }
  {
    auto out = manifest.create("membership.csv");
    write_csv_row(out, factor_header({"term", "assigned_factor"}));
    for (const auto& row : membership_table(model)) {
      std::vector<std::string> cells = {row.term, "factor" + std::to_string(row.factor + 1)};
      for (const auto& cell : row.displayed) cells.push_back(cell ? format_double(*cell) : "");
      write_csv_row(out, cells);
    }
  }
  {
    // constancy of the raw buoy variables over the joined records
    auto out = manifest.create("constancy.csv");
    write_csv_row(out, {"variable", "constancy"});
    for (const char* var : {"w", "p", "a", "t"}) {
      std::vector<double> column;
      for (const auto& obs : joined.observations) column.push_back(obs.at(var));
      write_csv_row(out, {var, format_double(constancy_index(column))});
    }
  }
  manifest.write();
}

void cmd_fit(const DataArgs& data_args, const ModelTermArgs& term_args, const IoArgs& io) {
  Manifest manifest("fit", io);
  record_data_config(manifest, data_args);
  manifest.config("preset", term_args.preset);
  manifest.config("terms", term_args.terms_csv);
  manifest.config("variables", term_args.variables_csv);

  const ModelSpec spec = resolve_terms(term_args);
  const LoadedData data = load_inputs(data_args, manifest, true, true);
  const JoinedData joined = join_pipeline(data, data_args, manifest);
  if (joined.observations.size() <= spec.terms.size())
    throw NumericsError("not enough complete records (" +
                        std::to_string(joined.observations.size()) + ") for " +
                        std::to_string(spec.terms.size()) + " terms");

  const DesignMatrix design = evaluate(spec.terms, joined.observations, joined.keys);
  ImplicitModel model = fit_unity(design);
  model.variables = spec.variables;

  auto out = manifest.create("model.json");
  out << to_json(model).dump(2) << '\n';
  manifest.count("n_records", model.n_records);
  manifest.count("r_squared", model.r_squared);
  manifest.write();
}

void cmd_predict(const DataArgs& data_args, const std::string& model_path,
                 const std::string& target, bool unobserved, double band_lo, double band_hi,
                 const IoArgs& io) {
  Manifest manifest("predict", io);
  record_data_config(manifest, data_args);
  manifest.config("model", model_path);
  manifest.config("target", target);
  manifest.config("unobserved", unobserved);
  manifest.config("band", json::array({band_lo, band_hi}));

  const ImplicitModel model = load_model(model_path, manifest);
  const LoadedData data = load_inputs(data_args, manifest, true, true);
  const JoinedData joined = join_pipeline(data, data_args, manifest);
  if (joined.observations.empty()) throw NumericsError("no complete joined records");

  // per-pressure-bin mean wind, for root selection without an observed target
  std::map<double, std::pair<double, std::size_t>> pressure_bins;
  double overall_mean_wind = 0.0;
  for (const auto& r : joined.records) {
    const double bin = std::round(*r.storm.pressure / 10.0) * 10.0;
    auto& [sum, count] = pressure_bins[bin];
    sum += r.storm.wind;
    ++count;
    overall_mean_wind += r.storm.wind;
  }
  overall_mean_wind /= static_cast<double>(joined.records.size());

  auto out = manifest.create("predictions.csv");
  write_csv_row(out, {"row_key", "timestamp", "storm_id", "lat", "lon", "observed", "lower",
                      "upper", "status", "estimate", "chosen"});

  std::vector<double> observed_series, estimate_series;
  std::size_t complex_count = 0;
  for (std::size_t i = 0; i < joined.records.size(); ++i) {
    const JoinedRecord& rec = joined.records[i];
    Observation others = joined.observations[i];
    const double observed = others.at(target);
    others.erase(target);
    const QuadraticBounds bounds = quadratic_in(model, target, others);

    std::string estimate, chosen;
    if (bounds.status == RootStatus::complex_roots) {
      ++complex_count;
    } else if (unobserved) {
      // without an observed target: prefer the roots inside the physical
      // band, then the one nearer the record's pressure-bin mean wind
      const double bin = std::round(*rec.storm.pressure / 10.0) * 10.0;
      const auto bin_it = pressure_bins.find(bin);
      const double anchor =
          bin_it != pressure_bins.end()
              ? bin_it->second.first / static_cast<double>(bin_it->second.second)
              : overall_mean_wind;
      std::vector<std::pair<double, const char*>> candidates;
      for (const auto& [root, label] :
           {std::pair<double, const char*>{*bounds.lower, "lower"}, {*bounds.upper, "upper"}})
        if (root >= band_lo && root <= band_hi) candidates.emplace_back(root, label);
      if (!candidates.empty()) {
        auto best = candidates.front();
        for (const auto& cand : candidates)
          if (std::abs(cand.first - anchor) < std::abs(best.first - anchor)) best = cand;
        estimate = format_double(best.first);
        chosen = best.second;
      }
    } else {
      const double est = select_root(bounds, observed);
      estimate = format_double(est);
      chosen = (est == *bounds.lower && est != *bounds.upper) ? "lower" : "upper";
      observed_series.push_back(observed);
      estimate_series.push_back(est);
    }

    write_csv_row(out, {joined.keys[i], to_iso8601(rec.storm.timestamp), rec.storm.storm_id,
                        format_double(rec.storm.lat), format_double(rec.storm.lon),
                        format_double(observed),
                        bounds.lower ? format_double(*bounds.lower) : "",
                        bounds.upper ? format_double(*bounds.upper) : "",
                        to_string(bounds.status), estimate, chosen});
  }

  manifest.count("predicted", joined.records.size() - complex_count);
  manifest.count("complex_roots", complex_count);
  if (observed_series.size() >= 2) {
    try {
      manifest.count("correlation", pearson(observed_series, estimate_series));
    } catch (const NumericsError&) {
      // degenerate series; correlation simply not reported
    }
  }
  manifest.write();
}

void cmd_lag_scan(const DataArgs& data_args, const ModelTermArgs& term_args,
                  const std::string& dt_range, const IoArgs& io) {
  Manifest manifest("lag-scan", io);
  record_data_config(manifest, data_args, false);
  manifest.config("dt_range", dt_range);
  manifest.config("preset", term_args.preset);
  manifest.config("terms", term_args.terms_csv);

  ScanConfig config;
  config.join_tolerance_seconds = static_cast<std::int64_t>(data_args.tolerance_min * 60.0);
  {
    const auto colon = dt_range.find(':');
    const auto first = parse_int(colon == std::string::npos
                                     ? std::string_view(dt_range)
                                     : std::string_view(dt_range).substr(0, colon));
    const auto last = colon == std::string::npos
                          ? first
                          : parse_int(std::string_view(dt_range).substr(colon + 1));
    if (!first || !last || *first > *last)
      throw Error("bad --dt-range '" + dt_range + "' (expected first:last)");
    config.dt_first = static_cast<int>(*first);
    config.dt_last = static_cast<int>(*last);
  }

  const ModelSpec spec = resolve_terms(term_args);
  const LoadedData data = load_inputs(data_args, manifest, true, true);
  const LagScanResult result = scan(data.storms, data.buoys, spec.terms, config);

  auto out = manifest.create("lag_curve.csv");
  correlation_curve_csv(result, out);

  manifest.count("lags", result.entries.size());
  manifest.count("best_lag", result.best_lag);
  for (const auto& entry : result.entries) {
    if (entry.dt == result.best_lag && entry.correlation)
      manifest.count("best_correlation", *entry.correlation);
  }
  manifest.write();
}

void cmd_bin_means(const DataArgs& data_args, const IoArgs& io) {
  Manifest manifest("bin-means", io);
  record_data_config(manifest, data_args);

  const LoadedData data = load_inputs(data_args, manifest, true, true);
  const JoinedData joined = join_pipeline(data, data_args, manifest);
  const BinnedMeans binned = bin_means(joined.records);

  {
    auto out = manifest.create("bins.csv");
    write_bins_csv(binned.bins, out);
  }
  if (binned.bins.size() >= 2) {
    auto out = manifest.create("variability.csv");
    write_csv_row(out, {"variable", "constancy"});
    for (const auto& entry : variability_report(binned.bins))
      write_csv_row(out, {entry.variable, format_double(entry.constancy)});
  }
  manifest.count("bins", binned.bins.size());
  manifest.count("wind_lints", binned.lints.size());
  manifest.write();
}

void cmd_conic(const DataArgs& data_args, const std::string& model_path,
               const std::string& var_x, const std::string& var_y,
               const std::vector<std::string>& fix_pairs, const IoArgs& io) {
  Manifest manifest("conic", io);
  record_data_config(manifest, data_args);
  manifest.config("model", model_path);
  manifest.config("x", var_x);
  manifest.config("y", var_y);
  manifest.config("fix", fix_pairs);

  const ImplicitModel model = load_model(model_path, manifest);
  Observation fixed = parse_fixed(fix_pairs);
  json from_means = json::object();
  const auto joined = maybe_join(data_args, manifest);
  fill_fixed_from_means(model, var_x, var_y, fixed, joined ? &*joined : nullptr, from_means);

  const ConicSlice slice = slice_model(model, var_x, var_y, fixed);

  json j;
  j["var_x"] = var_x;
  j["var_y"] = var_y;
  j["fixed"] = fixed;
  j["fixed_from_dataset_means"] = from_means;
  j["coefficients"] = {{"A", slice.a}, {"B", slice.b}, {"C", slice.c},
                       {"D", slice.d}, {"E", slice.e}, {"F", slice.f}};
  j["kind"] = to_string(slice.kind);
  j["model"] = {{"path", model_path}, {"sha256", sha256_file_hex(model_path)}};
  auto out = manifest.create("conic.json");
  out << j.dump(2) << '\n';
  manifest.write();
}

void cmd_export_grid(const DataArgs& data_args, const std::string& model_path,
                     const std::string& var_x, const std::string& var_y,
                     const std::vector<std::string>& fix_pairs, const std::string& x_range,
                     const std::string& y_range, const IoArgs& io) {
  Manifest manifest("export-grid", io);
  record_data_config(manifest, data_args);
  manifest.config("model", model_path);
  manifest.config("x", var_x);
  manifest.config("y", var_y);
  manifest.config("x_range", x_range);
  manifest.config("y_range", y_range);
  manifest.config("fix", fix_pairs);

  auto parse_range = [](const std::string& text, const char* flag) {
    const auto first = text.find(':');
    const auto second = text.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos)
      throw Error(std::string(flag) + " expects min:max:steps, got '" + text + "'");
    const auto lo = parse_double(std::string_view(text).substr(0, first));
    const auto hi = parse_double(std::string_view(text).substr(first + 1, second - first - 1));
    const auto steps = parse_int(std::string_view(text).substr(second + 1));
    if (!lo || !hi || !steps || *steps < 2)
      throw Error(std::string(flag) + " expects min:max:steps with steps >= 2");
    return std::tuple<double, double, std::size_t>{*lo, *hi, static_cast<std::size_t>(*steps)};
  };
  const auto [x_min, x_max, x_steps] = parse_range(x_range, "--x-range");
  const auto [y_min, y_max, y_steps] = parse_range(y_range, "--y-range");

  const ImplicitModel model = load_model(model_path, manifest);
  Observation fixed = parse_fixed(fix_pairs);
  json from_means = json::object();
  const auto joined = maybe_join(data_args, manifest);
  fill_fixed_from_means(model, var_x, var_y, fixed, joined ? &*joined : nullptr, from_means);

  const ConicSlice slice = slice_model(model, var_x, var_y, fixed);
  const GridResult grid =
      grid_evaluate(model, var_x, x_min, x_max, x_steps, var_y, y_min, y_max, y_steps, fixed);

  {
    auto out = manifest.create("grid.csv");
    write_csv_row(out, {"x", "y", "u_hat"});
    for (std::size_t i = 0; i < grid.ys.size(); ++i)
      for (std::size_t j = 0; j < grid.xs.size(); ++j)
        write_csv_row(out, {format_double(grid.xs[j]), format_double(grid.ys[i]),
                            format_double(grid.values(i, j))});
  }
  if (joined) {
    // observed (x, y) pairs so consumers can overlay the data on the contour
    auto out = manifest.create("scatter.csv");
    write_csv_row(out, {var_x, var_y});
    for (const auto& obs : joined->observations) {
      const auto x_it = obs.find(var_x);
      const auto y_it = obs.find(var_y);
      if (x_it == obs.end() || y_it == obs.end()) continue;
      write_csv_row(out, {format_double(x_it->second), format_double(y_it->second)});
    }
  }
  {
    json j;
    j["var_x"] = var_x;
    j["var_y"] = var_y;
    j["x_axis"] = grid.xs;
    j["y_axis"] = grid.ys;
    j["fixed"] = fixed;
    j["fixed_from_dataset_means"] = from_means;
    j["level"] = 1.0;
    j["classification"] = to_string(slice.kind);
    j["model"] = {{"path", model_path}, {"sha256", sha256_file_hex(model_path)}};
    auto out = manifest.create("grid_meta.json");
    out << j.dump(2) << '\n';
  }
  manifest.count("grid_points", grid.xs.size() * grid.ys.size());
  manifest.write();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stormfit: implicit-regression analysis of storm and buoy readings"};
  app.require_subcommand(1);

  DataArgs data_args;
  IoArgs io;
  ModelTermArgs term_args;
  std::string scale_path, model_path, dt_range = "1:36";
  std::string var_x, var_y, x_range, y_range, target = "W";
  std::vector<std::string> fix_pairs;
  std::size_t n_factors = 5;
  std::string rotation = "varimax";
  bool unobserved = false;
  double band_lo = 0.0, band_hi = 200.0;

  auto add_common = [&](CLI::App* sub, bool with_dt = true) {
    sub->add_option("--storms", data_args.storms_path, "best-track text file");
    sub->add_option("--buoys", data_args.buoys_path, "standard meteorological text file");
    sub->add_option("--station", data_args.station, "station id recorded for buoy readings");
    if (with_dt) sub->add_option("--dt", data_args.dt, "day lag between buoy and storm");
    sub->add_option("--tolerance-min", data_args.tolerance_min, "join tolerance in minutes");
    sub->add_option("--output-dir", io.output_dir, "directory for all emitted files");
  };
  auto add_terms = [&](CLI::App* sub) {
    sub->add_option("--preset", term_args.preset,
                    "term preset: factor1-wind, buoy-6term or buoy-14term");
    sub->add_option("--terms", term_args.terms_csv, "comma-separated term names");
    sub->add_option("--variables", term_args.variables_csv,
                    "declared variable order for --terms");
  };

  auto* ingest = app.add_subcommand("ingest", "parse raw files into canonical csv");
  add_common(ingest, false);

  auto* stats = app.add_subcommand("stats", "storm classification counts and wind summary");
  add_common(stats, false);
  stats->add_option("--scale", scale_path, "category scale json");

  auto* pca = app.add_subcommand("pca", "factor extraction over the 27-term set");
  add_common(pca);
  pca->add_option("--factors", n_factors, "number of factors to extract");
  pca->add_option("--rotation", rotation, "none or varimax");

  auto* fit = app.add_subcommand("fit", "fit a unity-response model");
  add_common(fit);
  add_terms(fit);

  auto* predict = app.add_subcommand("predict", "quadratic wind bounds per record");
  add_common(predict);
  predict->add_option("--model", model_path, "model json produced by fit");
  predict->add_option("--target", target, "variable to solve for");
  predict->add_flag("--unobserved", unobserved,
                    "select roots without the observed target (band + bin-mean heuristic)");
  predict->add_option("--band-lo", band_lo, "lower physical bound for the heuristic");
  predict->add_option("--band-hi", band_hi, "upper physical bound for the heuristic");

  auto* lag_scan = app.add_subcommand("lag-scan", "correlation curve over day lags");
  add_common(lag_scan, false);
  add_terms(lag_scan);
  lag_scan->add_option("--dt-range", dt_range, "lag range first:last (days)");

  auto* bins_cmd = app.add_subcommand("bin-means", "per-wind-bin buoy means");
  add_common(bins_cmd);

  auto* conic = app.add_subcommand("conic", "conic slice of a fitted model");
  add_common(conic);
  conic->add_option("--model", model_path, "model json produced by fit");
  conic->add_option("--x", var_x, "x variable")->required();
  conic->add_option("--y", var_y, "y variable")->required();
  conic->add_option("--fix", fix_pairs, "fixed values, name=value (repeatable)");

  auto* grid = app.add_subcommand("export-grid", "u-hat surface over a 2-d grid");
  add_common(grid);
  grid->add_option("--model", model_path, "model json produced by fit");
  grid->add_option("--x", var_x, "x variable")->required();
  grid->add_option("--y", var_y, "y variable")->required();
  grid->add_option("--x-range", x_range, "min:max:steps")->required();
  grid->add_option("--y-range", y_range, "min:max:steps")->required();
  grid->add_option("--fix", fix_pairs, "fixed values, name=value (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) cmd_ingest(data_args, io);
    if (*stats) cmd_stats(data_args, scale_path, io);
    if (*pca) cmd_pca(data_args, n_factors, rotation, io);
    if (*fit) cmd_fit(data_args, term_args, io);
    if (*predict) cmd_predict(data_args, model_path, target, unobserved, band_lo, band_hi, io);
    if (*lag_scan) cmd_lag_scan(data_args, term_args, dt_range, io);
    if (*bins_cmd) cmd_bin_means(data_args, io);
    if (*conic) cmd_conic(data_args, model_path, var_x, var_y, fix_pairs, io);
    if (*grid)
      cmd_export_grid(data_args, model_path, var_x, var_y, fix_pairs, x_range, y_range, io);
  } catch (const FormatError& e) {
    std::cerr << "stormfit: input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "stormfit: error: " << e.what() << '\n';
    return kExitNumerics;
  }
  return kExitOk;
}
