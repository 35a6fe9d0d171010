#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stormfit/errors.hpp"
#include "stormfit/linalg.hpp"
#include "stormfit/terms.hpp"

namespace stormfit {

/// A non-response model: coefficients over a term set fitted against the
/// unity response, with no intercept among the predictors.
struct ImplicitModel {
  std::vector<std::string> variables;  ///< declared order, for term parsing
  std::vector<TermDescriptor> terms;
  std::vector<double> alpha;
  double r_squared = 0.0;  ///< uncentered: 1 - ||u - X alpha||^2 / n
  std::size_t n_records = 0;
};

/// Minimizes ||1 - X alpha||^2 over the design matrix columns.
inline ImplicitModel fit_unity(const DesignMatrix& m) {
  const std::size_t n = m.rows.rows();
  const std::size_t k = m.rows.cols();
  if (n == 0) throw std::invalid_argument("fit_unity: empty design matrix");

  const std::vector<double> unity(n, 1.0);
  LstsqResult fit;
  try {
    fit = lstsq(m.rows, unity);
  } catch (const RankDeficientError& e) {
    std::string msg = "fit_unity: dependent terms:";
    for (auto c : e.dependent_columns) msg += " " + m.terms[c].name();
    throw RankDeficientError(msg, e.dependent_columns);
  }

  ImplicitModel model;
  model.variables = variables_of(m.terms);
  model.terms = m.terms;
  model.alpha = fit.coefficients;
  model.r_squared = 1.0 - fit.residual_ss / static_cast<double>(n);
  model.n_records = n;

  if (model.r_squared < 0.0) {
    // Cannot happen when any column has nonzero mean; if it does, the solver
    // returned something worse than the zero fit.
    for (std::size_t j = 0; j < k; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += m.rows(i, j);
      mean /= static_cast<double>(n);
      if (std::abs(mean) > 1e-9)
        throw NumericsError("fit_unity: negative R^2 with nonzero-mean column " +
                            m.terms[j].name());
    }
  }
  return model;
}

inline double evaluate_model(const ImplicitModel& model, const Observation& record) {
  double u = 0.0;
  for (std::size_t j = 0; j < model.terms.size(); ++j)
    u += model.alpha[j] * model.terms[j].evaluate(record);
  return u;
}

enum class RootStatus { two_roots, double_root, complex_roots, linear };

inline const char* to_string(RootStatus s) {
  switch (s) {
    case RootStatus::two_roots: return "two-roots";
    case RootStatus::double_root: return "double-root";
    case RootStatus::complex_roots: return "complex";
    case RootStatus::linear: return "linear";
  }
  return "?";
}

/// The fitted model reduced to a quadratic A r^2 + B r + C = 0 in one target
/// variable, with the resulting lower/upper root estimators.
struct QuadraticBounds {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
  RootStatus status = RootStatus::complex_roots;
};

/// Groups the model's terms by their degree in `target` and evaluates the
/// cofactors at `record` (which must supply every non-target variable):
///   A = sum over target^2 terms, B = sum over degree-1 terms of
///   coefficient x cofactor, C = evaluated degree-0 part - 1.
inline QuadraticBounds quadratic_in(const ImplicitModel& model, const std::string& target,
                                    const Observation& record) {
  bool target_in_model = false;
  QuadraticBounds q;
  q.c = -1.0;  // the unity response moved across

  for (std::size_t j = 0; j < model.terms.size(); ++j) {
    const TermDescriptor& term = model.terms[j];
    const int target_power = term.power_of(target);
    if (target_power > 0) target_in_model = true;

    double cofactor = 1.0;
    for (const auto& f : term.factors()) {
      if (f.variable == target) continue;
      const auto it = record.find(f.variable);
      if (it == record.end())
        throw Error("quadratic_in: record is missing variable '" + f.variable + "'");
      cofactor *= (f.power == 2) ? it->second * it->second : it->second;
    }
    const double contribution = model.alpha[j] * cofactor;
    switch (target_power) {
      case 0: q.c += contribution; break;
      case 1: q.b += contribution; break;
      case 2: q.a += contribution; break;
      default:
        throw Error("quadratic_in: term " + term.name() + " has degree " +
                    std::to_string(target_power) + " in " + target);
    }
  }
  if (!target_in_model)
    throw Error("quadratic_in: target variable '" + target + "' absent from the model");

  const double eps_a = 1e-12 * std::max(std::abs(q.b), 1.0);
  if (std::abs(q.a) < eps_a) {
    if (q.b == 0.0) {
      q.status = RootStatus::complex_roots;  // no root in the target at all
      return q;
    }
    q.status = RootStatus::linear;
    const double root = -q.c / q.b;
    q.lower = root;
    q.upper = root;
    return q;
  }

  const double disc = q.b * q.b - 4.0 * q.a * q.c;
  if (disc < 0.0) {
    q.status = RootStatus::complex_roots;
    return q;
  }
  if (disc == 0.0) {
    q.status = RootStatus::double_root;
    const double root = -q.b / (2.0 * q.a);
    q.lower = root;
    q.upper = root;
    return q;
  }

  // Larger-magnitude root first to dodge cancellation when B^2 >> 4AC.
  const double sqrt_disc = std::sqrt(disc);
  const double qq = -0.5 * (q.b + std::copysign(sqrt_disc, q.b));
  double r1, r2;
  if (qq == 0.0) {  // b == 0 and c == 0
    r1 = 0.0;
    r2 = 0.0;
  } else {
    r1 = qq / q.a;
    r2 = q.c / qq;
  }
  q.status = RootStatus::two_roots;
  q.lower = std::min(r1, r2);
  q.upper = std::max(r1, r2);
  return q;
}

/// Picks the root nearest the observed target value; an exact tie goes to
/// the upper root.
inline double select_root(const QuadraticBounds& bounds, double observed) {
  if (bounds.status == RootStatus::complex_roots || !bounds.lower)
    throw NumericsError("select_root: no real roots");
  const double lower = *bounds.lower;
  const double upper = *bounds.upper;
  return std::abs(lower - observed) < std::abs(upper - observed) ? lower : upper;
}

// --- JSON serialization (round-trip exact: shortest-round-trip numerals) ---

inline nlohmann::json to_json(const ImplicitModel& model) {
  nlohmann::json j;
  j["variables"] = model.variables;
  std::vector<std::string> names;
  names.reserve(model.terms.size());
  for (const auto& t : model.terms) names.push_back(t.name());
  j["terms"] = names;
  j["alpha"] = model.alpha;
  j["r_squared"] = model.r_squared;
  j["n_records"] = model.n_records;
  return j;
}

inline ImplicitModel model_from_json(const nlohmann::json& j) {
  ImplicitModel model;
  try {
    model.variables = j.at("variables").get<std::vector<std::string>>();
    const auto names = j.at("terms").get<std::vector<std::string>>();
    for (const auto& name : names)
      model.terms.push_back(parse_term_name(name, model.variables));
    model.alpha = j.at("alpha").get<std::vector<double>>();
    model.r_squared = j.at("r_squared").get<double>();
    model.n_records = j.at("n_records").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model json: ") + e.what());
  }
  if (model.alpha.size() != model.terms.size())
    throw FormatError("model json: alpha/terms length mismatch");
  return model;
}

}  // namespace stormfit
