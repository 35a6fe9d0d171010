#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "stormfit/errors.hpp"

namespace stormfit {

/// Dense row-major matrix. Sized for desk-scale statistics (tens of columns),
/// not for performance.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Symmetric matrix with exact mirror storage: set() writes both triangles.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t order) : m_(order, order) {}

  std::size_t order() const { return m_.rows(); }

  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  const Matrix& dense() const { return m_; }

 private:
  Matrix m_;
};

struct EigenResult {
  std::vector<double> values;  ///< descending
  Matrix vectors;              ///< orthonormal columns, vectors.col(i) pairs with values[i]
};

namespace detail {

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

inline double off_diagonal_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi eigendecomposition. Converged when the off-diagonal norm
/// falls below tol * ||A||_F; eigenvalues come back sorted descending with
/// matching orthonormal eigenvector columns.
inline EigenResult eigen_symmetric(const SymmetricMatrix& a, double tol = 1e-12,
                                   int max_sweeps = 64) {
  const std::size_t n = a.order();
  if (n == 0) throw std::invalid_argument("eigen_symmetric: empty matrix");
  if (tol <= 0.0) throw std::invalid_argument("eigen_symmetric: tol must be positive");
  if (!a.dense().all_finite()) throw std::invalid_argument("eigen_symmetric: non-finite entry");

  Matrix w = a.dense();
  Matrix v = Matrix::identity(n);
  const double scale = detail::frobenius_norm(w);

  bool converged = scale == 0.0;
  for (int sweep = 0; !converged && sweep < max_sweeps; ++sweep) {
    if (detail::off_diagonal_norm(w) <= tol * scale) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (apq == 0.0) continue;
        const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = w(p, p);
        const double aqq = w(q, q);
        w(p, p) = app - t * apq;
        w(q, q) = aqq + t * apq;
        w(p, q) = 0.0;
        w(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double wkp = w(k, p);
          const double wkq = w(k, q);
          w(k, p) = c * wkp - s * wkq;
          w(p, k) = w(k, p);
          w(k, q) = s * wkp + c * wkq;
          w(q, k) = w(k, q);
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged && detail::off_diagonal_norm(w) > tol * scale) {
    throw ConvergenceError("eigen_symmetric: no convergence after " +
                               std::to_string(max_sweeps) + " sweeps",
                           detail::off_diagonal_norm(w));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return w(i, i) > w(j, j); });

  EigenResult result;
  result.values.resize(n);
  result.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    result.values[j] = w(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) result.vectors(i, j) = v(i, order[j]);
  }
  return result;
}

struct LstsqResult {
  std::vector<double> coefficients;
  double residual_ss = 0.0;
  /// Ratio of the largest to the smallest retained R diagonal.
  double condition_estimate = 0.0;
};

inline constexpr double kRankThreshold = 1e-12;

/// Least squares via Householder QR with column pivoting. The design
/// matrices here mix magnitudes badly (pressure^2 vs temperature), so the
/// normal equations are avoided; they serve only as a test oracle.
inline LstsqResult lstsq(const Matrix& x, std::span<const double> y) {
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  if (k < 1 || n < k) throw std::invalid_argument("lstsq: need n >= k >= 1");
  if (y.size() != n) throw std::invalid_argument("lstsq: y length mismatch");
  if (!x.all_finite()) throw std::invalid_argument("lstsq: non-finite entry");

  Matrix a = x;
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> beta(k, 0.0);
  std::vector<double> rdiag(k, 0.0);

  for (std::size_t j = 0; j < k; ++j) {
    // Pivot on the largest remaining column norm (recomputed; sizes are small).
    std::size_t best = j;
    double best_norm = -1.0;
    for (std::size_t l = j; l < k; ++l) {
      double s = 0.0;
      for (std::size_t i = j; i < n; ++i) s += a(i, l) * a(i, l);
      if (s > best_norm) {
        best_norm = s;
        best = l;
      }
    }
    if (best != j) {
      for (std::size_t i = 0; i < n; ++i) std::swap(a(i, j), a(i, best));
      std::swap(perm[j], perm[best]);
    }

    double sigma = std::sqrt(best_norm);
    if (sigma == 0.0) {
      rdiag[j] = 0.0;
      continue;
    }
    if (a(j, j) < 0.0) sigma = -sigma;
    // Householder vector stored below the diagonal; v0 kept separately via beta.
    a(j, j) += sigma;
    beta[j] = 1.0 / (sigma * a(j, j));
    rdiag[j] = -sigma;

    for (std::size_t l = j + 1; l < k; ++l) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += a(i, j) * a(i, l);
      dot *= beta[j];
      for (std::size_t i = j; i < n; ++i) a(i, l) -= dot * a(i, j);
    }
  }

  const double rmax = std::abs(rdiag[0]);
  std::size_t rank = 0;
  while (rank < k && std::abs(rdiag[rank]) >= kRankThreshold * rmax && rdiag[rank] != 0.0) {
    ++rank;
  }
  if (rank < k) {
    std::vector<std::size_t> dependent(perm.begin() + static_cast<std::ptrdiff_t>(rank),
                                       perm.end());
    std::sort(dependent.begin(), dependent.end());
    std::string msg = "lstsq: rank-deficient design matrix; dependent columns:";
    for (auto c : dependent) msg += " " + std::to_string(c);
    throw RankDeficientError(msg, std::move(dependent));
  }

  // Apply the stored reflections to y, then back-substitute.
  std::vector<double> qty(y.begin(), y.end());
  for (std::size_t j = 0; j < k; ++j) {
    if (beta[j] == 0.0) continue;
    double dot = 0.0;
    for (std::size_t i = j; i < n; ++i) dot += a(i, j) * qty[i];
    dot *= beta[j];
    for (std::size_t i = j; i < n; ++i) qty[i] -= dot * a(i, j);
  }

  std::vector<double> z(k, 0.0);
  for (std::size_t jj = k; jj-- > 0;) {
    double s = qty[jj];
    for (std::size_t l = jj + 1; l < k; ++l) s -= a(jj, l) * z[l];
    z[jj] = s / rdiag[jj];
  }

  LstsqResult result;
  result.coefficients.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) result.coefficients[perm[j]] = z[j];

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < k; ++j) fit += x(i, j) * result.coefficients[j];
    const double r = y[i] - fit;
    rss += r * r;
  }
  result.residual_ss = rss;
  result.condition_estimate = std::abs(rdiag[0]) / std::abs(rdiag[k - 1]);
  return result;
}

/// Pearson correlation of every column pair. Columns are identified by
/// `names` in error messages when provided.
inline SymmetricMatrix correlation_matrix(const Matrix& m,
                                          std::span<const std::string> names = {}) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  if (n < 2) throw std::invalid_argument("correlation_matrix: need at least 2 rows");

  std::vector<double> mean(k, 0.0), sd(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += m(i, j);
    mean[j] = s / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = m(i, j) - mean[j];
      ss += d * d;
    }
    if (ss == 0.0) {
      const std::string label = j < names.size() ? names[j] : "column " + std::to_string(j);
      throw NumericsError("correlation_matrix: zero-variance column: " + label);
    }
    sd[j] = std::sqrt(ss);
  }

  SymmetricMatrix corr(k);
  for (std::size_t i = 0; i < k; ++i) {
    corr.set(i, i, 1.0);
    for (std::size_t j = i + 1; j < k; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += (m(r, i) - mean[i]) * (m(r, j) - mean[j]);
      corr.set(i, j, std::clamp(s / (sd[i] * sd[j]), -1.0, 1.0));
    }
  }
  return corr;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson: need two equal-length series of >= 2 points");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw NumericsError("pearson: zero-variance series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace stormfit
