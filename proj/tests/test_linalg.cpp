#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stormfit/linalg.hpp"

using namespace stormfit;

namespace {

SymmetricMatrix random_symmetric(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  SymmetricMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a.set(i, j, dist(rng));
  return a;
}

double reconstruction_error(const SymmetricMatrix& a, const EigenResult& e) {
  const std::size_t n = a.order();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double rebuilt = 0.0;
      for (std::size_t l = 0; l < n; ++l)
        rebuilt += e.vectors(i, l) * e.values[l] * e.vectors(j, l);
      const double d = rebuilt - a(i, j);
      num += d * d;
      den += a(i, j) * a(i, j);
    }
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

// Normal-equations oracle: solves X^T X b = X^T y by Gaussian elimination.
// Independent of the QR path under test.
std::vector<double> normal_equations(const Matrix& x, const std::vector<double>& y) {
  const std::size_t n = x.rows(), k = x.cols();
  std::vector<std::vector<double>> aug(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t r = 0; r < n; ++r) aug[i][j] += x(r, i) * x(r, j);
    for (std::size_t r = 0; r < n; ++r) aug[i][k] += x(r, i) * y[r];
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[piv][col])) piv = r;
    std::swap(aug[col], aug[piv]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double factor = aug[r][col] / aug[col][col];
      for (std::size_t c = col; c <= k; ++c) aug[r][c] -= factor * aug[col][c];
    }
  }
  std::vector<double> b(k);
  for (std::size_t i = 0; i < k; ++i) b[i] = aug[i][k] / aug[i][i];
  return b;
}

}  // namespace

TEST_CASE("eigen_symmetric: hand-checked cases") {
  SUBCASE("identity of order 4") {
    SymmetricMatrix a(4);
    for (std::size_t i = 0; i < 4; ++i) a.set(i, i, 1.0);
    const auto e = eigen_symmetric(a);
    for (double v : e.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("[[2,1],[1,2]] has eigenvalues 3 and 1") {
    SymmetricMatrix a(2);
    a.set(0, 0, 2.0);
    a.set(1, 1, 2.0);
    a.set(0, 1, 1.0);
    const auto e = eigen_symmetric(a);
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("diagonal passes through sorted") {
    SymmetricMatrix a(3);
    a.set(0, 0, 5.0);
    a.set(1, 1, 2.0);
    a.set(2, 2, -1.0);
    const auto e = eigen_symmetric(a);
    CHECK(e.values == std::vector<double>{5.0, 2.0, -1.0});
  }
}

TEST_CASE("eigen_symmetric: reconstruction, trace and orthonormality on random input") {
  std::mt19937 rng(1234);
  std::uniform_int_distribution<std::size_t> size_dist(2, 30);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = size_dist(rng);
    const SymmetricMatrix a = random_symmetric(rng, n);
    const EigenResult e = eigen_symmetric(a);

    CHECK(reconstruction_error(a, e) < 1e-8);

    double trace = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      trace += a(i, i);
      sum += e.values[i];
    }
    CHECK(std::abs(trace - sum) <= 1e-8 * std::max(std::abs(trace), 1.0));

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += e.vectors(r, i) * e.vectors(r, j);
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
    }
    for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] >= e.values[i]);
  }
}

TEST_CASE("lstsq: exact small systems") {
  SUBCASE("single constant column") {
    Matrix x(3, 1);
    x(0, 0) = x(1, 0) = x(2, 0) = 1.0;
    const std::vector<double> y = {2.0, 2.0, 2.0};
    const auto r = lstsq(x, y);
    CHECK(r.coefficients[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.residual_ss == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("identity design") {
    Matrix x = Matrix::identity(2);
    const std::vector<double> y = {3.0, 7.0};
    const auto r = lstsq(x, y);
    CHECK(r.coefficients[0] == doctest::Approx(3.0));
    CHECK(r.coefficients[1] == doctest::Approx(7.0));
  }
  SUBCASE("duplicate columns are rank-deficient") {
    Matrix x(4, 2);
    for (std::size_t i = 0; i < 4; ++i) x(i, 0) = x(i, 1) = static_cast<double>(i + 1);
    const std::vector<double> y = {1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_AS(lstsq(x, y), RankDeficientError);
  }
  SUBCASE("bad shapes rejected") {
    Matrix x(2, 3);
    const std::vector<double> y = {1.0, 2.0};
    CHECK_THROWS_AS(lstsq(x, y), std::invalid_argument);
  }
}

TEST_CASE("lstsq: residual orthogonality and normal-equations agreement") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 40, k = 6;
    Matrix x(n, k);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) x(i, j) = dist(rng);
      y[i] = dist(rng);
    }
    const auto r = lstsq(x, y);

    // residual orthogonal to every column
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) {
      double fit = 0.0;
      for (std::size_t j = 0; j < k; ++j) fit += x(i, j) * r.coefficients[j];
      resid[i] = y[i] - fit;
    }
    for (std::size_t j = 0; j < k; ++j) {
      double dot = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += resid[i] * x(i, j);
        norm += x(i, j) * x(i, j);
      }
      CHECK(std::abs(dot) <= 1e-8 * std::max(std::sqrt(norm), 1.0));
    }

    const auto oracle = normal_equations(x, y);
    for (std::size_t j = 0; j < k; ++j)
      CHECK(r.coefficients[j] ==
            doctest::Approx(oracle[j]).epsilon(1e-6).scale(std::abs(oracle[j]) + 1.0));
  }
}

TEST_CASE("correlation_matrix basics") {
  Matrix m(3, 3);
  // col0 = (1,2,3), col1 = -(col0), col2 = 2*col0
  for (std::size_t i = 0; i < 3; ++i) {
    m(i, 0) = static_cast<double>(i + 1);
    m(i, 1) = -static_cast<double>(i + 1);
    m(i, 2) = 2.0 * static_cast<double>(i + 1);
  }
  const auto c = correlation_matrix(m);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(0, 1) == doctest::Approx(-1.0));
  CHECK(c(0, 2) == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(c(i, j) <= 1.0);
      CHECK(c(i, j) >= -1.0);
      CHECK(c(i, j) == c(j, i));
    }
}

TEST_CASE("correlation_matrix rejects zero-variance columns by name") {
  Matrix m(3, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    m(i, 0) = static_cast<double>(i);
    m(i, 1) = 4.0;
  }
  const std::vector<std::string> names = {"x", "const_col"};
  CHECK_THROWS_WITH_AS(correlation_matrix(m, names),
                       "correlation_matrix: zero-variance column: const_col", NumericsError);
}

TEST_CASE("pearson correlation") {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> b = {2.0, 4.0, 6.0, 8.0};
  CHECK(pearson(a, b) == doctest::Approx(1.0));
  const std::vector<double> c = {4.0, 3.0, 2.0, 1.0};
  CHECK(pearson(a, c) == doctest::Approx(-1.0));
}
