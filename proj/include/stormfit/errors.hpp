#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stormfit {

/// Base class for all stormfit failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input data: unreadable headers, missing columns, bad field layout.
struct FormatError : Error {
  using Error::Error;
};

/// Numerical failures: non-convergence, rank deficiency, degenerate data.
struct NumericsError : Error {
  using Error::Error;
};

struct ConvergenceError : NumericsError {
  ConvergenceError(const std::string& what, double off_norm)
      : NumericsError(what), off_diagonal_norm(off_norm) {}

  double off_diagonal_norm;
};

struct RankDeficientError : NumericsError {
  RankDeficientError(const std::string& what, std::vector<std::size_t> cols)
      : NumericsError(what), dependent_columns(std::move(cols)) {}

  /// Column indices (of the input matrix) found numerically dependent.
  std::vector<std::size_t> dependent_columns;
};

}  // namespace stormfit
