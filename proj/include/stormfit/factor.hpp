#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stormfit/errors.hpp"
#include "stormfit/linalg.hpp"
#include "stormfit/terms.hpp"

namespace stormfit {

enum class Rotation { none, varimax };

inline const char* to_string(Rotation r) {
  return r == Rotation::varimax ? "varimax" : "none";
}

/// Principal-component loadings over a term set, with the Table-2-style
/// bookkeeping: SS loadings, variance proportions, cumulative proportions,
/// and the count of factors surviving the retention rule.
struct FactorModel {
  std::vector<std::string> term_names;
  Matrix loadings;  ///< term x factor
  std::vector<double> ss_loadings;
  std::vector<double> proportion_variance;
  std::vector<double> cumulative_variance;
  int retained = 0;
  Rotation rotation = Rotation::none;
};

inline int retain_factors(const FactorModel& model, double threshold = 1.0) {
  int count = 0;
  for (double ss : model.ss_loadings)
    if (ss >= threshold) ++count;
  return count;
}

namespace detail {

inline std::vector<double> column_ss(const Matrix& loadings) {
  std::vector<double> ss(loadings.cols(), 0.0);
  for (std::size_t j = 0; j < loadings.cols(); ++j)
    for (std::size_t i = 0; i < loadings.rows(); ++i) ss[j] += loadings(i, j) * loadings(i, j);
  return ss;
}

/// In-place varimax: pairwise planar rotations maximizing the variance of
/// squared loadings per factor, iterated to stationarity.
inline void varimax_rotate(Matrix& loadings, double eps = 1e-10, int max_iter = 200) {
  const std::size_t k = loadings.rows();
  const std::size_t f = loadings.cols();
  if (f < 2) return;
  const double nk = static_cast<double>(k);

  auto criterion = [&] {
    double crit = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      double s2 = 0.0, s4 = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double sq = loadings(i, j) * loadings(i, j);
        s2 += sq;
        s4 += sq * sq;
      }
      crit += s4 - s2 * s2 / nk;
    }
    return crit;
  };

  double crit = criterion();
  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t j = 0; j + 1 < f; ++j) {
      for (std::size_t l = j + 1; l < f; ++l) {
        double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          const double u = loadings(i, j) * loadings(i, j) - loadings(i, l) * loadings(i, l);
          const double v = 2.0 * loadings(i, j) * loadings(i, l);
          a += u;
          b += v;
          c += u * u - v * v;
          d += 2.0 * u * v;
        }
        const double num = d - 2.0 * a * b / nk;
        const double den = c - (a * a - b * b) / nk;
        if (std::abs(num) < 1e-300 && std::abs(den) < 1e-300) continue;
        const double angle = 0.25 * std::atan2(num, den);
        if (std::abs(angle) < 1e-14) continue;
        const double cs = std::cos(angle);
        const double sn = std::sin(angle);
        for (std::size_t i = 0; i < k; ++i) {
          const double lj = loadings(i, j);
          const double ll = loadings(i, l);
          loadings(i, j) = cs * lj + sn * ll;
          loadings(i, l) = -sn * lj + cs * ll;
        }
      }
    }
    const double next = criterion();
    if (next - crit <= eps * std::max(std::abs(crit), 1.0)) break;
    crit = next;
  }
}

}  // namespace detail

/// Principal-component loadings of the correlation matrix: eigenvector
/// columns scaled by sqrt(eigenvalue), optionally varimax-rotated, ordered
/// by descending SS loading. Factor signs are normalized so each column
/// sums nonnegative.
inline FactorModel extract_factors(const DesignMatrix& m, std::size_t n_factors,
                                   Rotation rotation = Rotation::none) {
  const std::size_t k = m.terms.size();
  if (n_factors < 1 || n_factors > k)
    throw std::invalid_argument("extract_factors: n_factors must be in [1, #terms]");

  const SymmetricMatrix corr = correlation_matrix(m);
  const EigenResult eig = eigen_symmetric(corr);

  Matrix loadings(k, n_factors);
  for (std::size_t j = 0; j < n_factors; ++j) {
    const double lambda = std::max(eig.values[j], 0.0);
    const double scale = std::sqrt(lambda);
    for (std::size_t i = 0; i < k; ++i) loadings(i, j) = eig.vectors(i, j) * scale;
  }

  if (rotation == Rotation::varimax) detail::varimax_rotate(loadings);

  // Order factors by descending SS loading, then fix signs.
  std::vector<double> ss = detail::column_ss(loadings);
  std::vector<std::size_t> order(n_factors);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ss[a] > ss[b]; });

  FactorModel model;
  model.rotation = rotation;
  model.term_names = m.term_names();
  model.loadings = Matrix(k, n_factors);
  for (std::size_t j = 0; j < n_factors; ++j) {
    double colsum = 0.0;
    for (std::size_t i = 0; i < k; ++i) colsum += loadings(i, order[j]);
    const double sign = colsum < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < k; ++i) model.loadings(i, j) = sign * loadings(i, order[j]);
  }

  model.ss_loadings = detail::column_ss(model.loadings);
  model.proportion_variance.resize(n_factors);
  model.cumulative_variance.resize(n_factors);
  double cumulative = 0.0;
  for (std::size_t j = 0; j < n_factors; ++j) {
    model.proportion_variance[j] = model.ss_loadings[j] / static_cast<double>(k);
    cumulative += model.proportion_variance[j];
    model.cumulative_variance[j] = cumulative;
  }
  model.retained = retain_factors(model);
  return model;
}

/// One row of the Table-1-style membership report: the term's assigned
/// factor (argmax of |loading|, ties to the lower index) plus the loading
/// cells that survive the display threshold.
struct MembershipRow {
  std::string term;
  std::size_t factor = 0;  ///< assigned factor, 0-based
  double loading = 0.0;    ///< loading on the assigned factor
  std::vector<std::optional<double>> displayed;  ///< per factor; blank below threshold
};

/// Rows come back grouped by assigned factor (ascending), preserving term
/// order within a group — the layout of a loadings-by-factor table.
inline std::vector<MembershipRow> membership_table(const FactorModel& model,
                                                   double display_threshold = 0.3) {
  const std::size_t k = model.term_names.size();
  const std::size_t f = model.ss_loadings.size();
  std::vector<MembershipRow> rows;
  rows.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    MembershipRow row;
    row.term = model.term_names[i];
    row.displayed.resize(f);
    std::size_t best = 0;
    for (std::size_t j = 0; j < f; ++j) {
      const double v = model.loadings(i, j);
      if (std::abs(v) >= display_threshold) row.displayed[j] = v;
      if (std::abs(v) > std::abs(model.loadings(i, best))) best = j;
    }
    row.factor = best;
    row.loading = model.loadings(i, best);
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MembershipRow& a, const MembershipRow& b) {
                     return a.factor < b.factor;
                   });
  return rows;
}

/// Uncentered R-squared of the one-term unity fit, (sum x)^2 / (n sum x^2):
/// 1 for constants, 3/4 for uniform-on-[0,b] samples. Scale-invariant.
inline double constancy_index(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("constancy_index: empty input");
  double sum = 0.0, sum_sq = 0.0;
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq == 0.0) throw NumericsError("constancy_index: all-zero vector");
  return (sum * sum) / (static_cast<double>(x.size()) * sum_sq);
}

}  // namespace stormfit
