#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stormfit/errors.hpp"
#include "stormfit/implicit.hpp"
#include "stormfit/terms.hpp"

namespace stormfit {

enum class ConicKind { ellipse, parabola, hyperbola, degenerate };

inline const char* to_string(ConicKind k) {
  switch (k) {
    case ConicKind::ellipse: return "ellipse";
    case ConicKind::parabola: return "parabola";
    case ConicKind::hyperbola: return "hyperbola";
    case ConicKind::degenerate: return "degenerate";
  }
  return "?";
}

/// A x^2 + B xy + C y^2 + D x + E y + F = 0. The B^2 - 4AC test is applied
/// relative to max(A^2, B^2, C^2) so the verdict is invariant under scaling
/// all six coefficients; degeneracy comes from the 3x3 conic determinant.
inline ConicKind classify(double a, double b, double c, double d, double e, double f,
                          double tol = 1e-9) {
  const double scale =
      std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d), std::abs(e), std::abs(f)});
  if (scale == 0.0) throw NumericsError("classify: all six conic coefficients are zero");

  const double quad_scale = std::max({a * a, b * b, c * c});
  if (quad_scale == 0.0) return ConicKind::degenerate;  // no quadratic part: a line

  const double det3 = a * (c * f - e * e / 4.0) - (b / 2.0) * (b * f / 2.0 - e * d / 4.0) +
                      (d / 2.0) * (b * e / 4.0 - c * d / 2.0);
  if (std::abs(det3) <= tol * scale * scale * scale) return ConicKind::degenerate;

  const double disc = b * b - 4.0 * a * c;
  if (std::abs(disc) <= tol * quad_scale) return ConicKind::parabola;
  return disc < 0.0 ? ConicKind::ellipse : ConicKind::hyperbola;
}

/// A fitted model restricted to two variables with everything else held
/// fixed, expressed as a level-1 conic (the fitted unity moved into F).
struct ConicSlice {
  std::string var_x;
  std::string var_y;
  Observation fixed;
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0, f = 0.0;
  ConicKind kind = ConicKind::degenerate;

  double evaluate(double x, double y) const {
    return a * x * x + b * x * y + c * y * y + d * x + e * y + f;
  }
};

/// Exact symbolic substitution of the fixed values into the model's terms,
/// bucketed by (power of x, power of y).
inline ConicSlice slice_model(const ImplicitModel& model, const std::string& var_x,
                              const std::string& var_y, const Observation& fixed,
                              double classify_tol = 1e-9) {
  if (var_x == var_y) throw std::invalid_argument("slice_model: var_x and var_y must differ");
  if (fixed.count(var_x) || fixed.count(var_y))
    throw Error("slice_model: sliced variable also appears in the fixed values");

  ConicSlice slice;
  slice.var_x = var_x;
  slice.var_y = var_y;
  slice.fixed = fixed;
  slice.f = -1.0;  // level u-hat = 1

  for (std::size_t j = 0; j < model.terms.size(); ++j) {
    const TermDescriptor& term = model.terms[j];
    int px = 0, py = 0;
    double cofactor = 1.0;
    for (const auto& factor : term.factors()) {
      if (factor.variable == var_x) {
        px = factor.power;
      } else if (factor.variable == var_y) {
        py = factor.power;
      } else {
        const auto it = fixed.find(factor.variable);
        if (it == fixed.end())
          throw Error("slice_model: variable '" + factor.variable +
                      "' is neither sliced nor fixed");
        cofactor *= (factor.power == 2) ? it->second * it->second : it->second;
      }
    }
    const double v = model.alpha[j] * cofactor;
    if (px == 2)      slice.a += v;
    else if (px == 1 && py == 1) slice.b += v;
    else if (py == 2) slice.c += v;
    else if (px == 1) slice.d += v;
    else if (py == 1) slice.e += v;
    else              slice.f += v;
  }
  slice.kind = classify(slice.a, slice.b, slice.c, slice.d, slice.e, slice.f, classify_tol);
  return slice;
}

inline ConicKind classify(const ConicSlice& slice, double tol = 1e-9) {
  return classify(slice.a, slice.b, slice.c, slice.d, slice.e, slice.f, tol);
}

struct GridResult {
  std::vector<double> xs;
  std::vector<double> ys;
  Matrix values;  ///< values(i, j) = u-hat at (xs[j], ys[i]); row-major over y then x
};

/// Evaluates the model over an inclusive rectangular grid; the u-hat = 1
/// level curve is left to the consumer to contour.
inline GridResult grid_evaluate(const ImplicitModel& model, const std::string& var_x,
                                double x_min, double x_max, std::size_t x_steps,
                                const std::string& var_y, double y_min, double y_max,
                                std::size_t y_steps, const Observation& fixed) {
  if (x_steps < 2 || y_steps < 2)
    throw std::invalid_argument("grid_evaluate: need at least 2 steps per axis");

  GridResult grid;
  grid.xs.resize(x_steps);
  grid.ys.resize(y_steps);
  for (std::size_t j = 0; j < x_steps; ++j)
    grid.xs[j] = x_min + (x_max - x_min) * static_cast<double>(j) /
                             static_cast<double>(x_steps - 1);
  for (std::size_t i = 0; i < y_steps; ++i)
    grid.ys[i] = y_min + (y_max - y_min) * static_cast<double>(i) /
                             static_cast<double>(y_steps - 1);

  grid.values = Matrix(y_steps, x_steps);
  Observation record = fixed;
  for (std::size_t i = 0; i < y_steps; ++i) {
    for (std::size_t j = 0; j < x_steps; ++j) {
      record[var_x] = grid.xs[j];
      record[var_y] = grid.ys[i];
      grid.values(i, j) = evaluate_model(model, record);
    }
  }
  return grid;
}

}  // namespace stormfit
