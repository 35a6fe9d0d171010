#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stormfit/errors.hpp"
#include "stormfit/linalg.hpp"

namespace stormfit {

/// One record's variable values by name.
using Observation = std::map<std::string, double>;

/// A monomial of total degree 1 or 2 over named variables. Factors are kept
/// in declared-variable order so rendering is canonical: "W", "W^2", "Wp".
class TermDescriptor {
 public:
  struct Factor {
    std::string variable;
    int power = 1;

    bool operator==(const Factor&) const = default;
  };

  TermDescriptor() = default;

  static TermDescriptor linear(std::string variable) {
    return TermDescriptor({{std::move(variable), 1}});
  }

  static TermDescriptor square(std::string variable) {
    return TermDescriptor({{std::move(variable), 2}});
  }

  /// `first` must precede `second` in the declared variable order.
  static TermDescriptor interaction(std::string first, std::string second) {
    return TermDescriptor({{std::move(first), 1}, {std::move(second), 1}});
  }

  const std::vector<Factor>& factors() const { return factors_; }

  int degree() const {
    int d = 0;
    for (const auto& f : factors_) d += f.power;
    return d;
  }

  int power_of(std::string_view variable) const {
    for (const auto& f : factors_)
      if (f.variable == variable) return f.power;
    return 0;
  }

  bool contains(std::string_view variable) const { return power_of(variable) > 0; }

  /// Table-style rendering: "W", "W^2", "WP". A '*' separates factors only
  /// when a variable name has more than one character.
  std::string name() const {
    const bool multi = std::any_of(factors_.begin(), factors_.end(),
                                   [](const Factor& f) { return f.variable.size() > 1; });
    std::string out;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (i && multi) out += '*';
      out += factors_[i].variable;
      if (factors_[i].power == 2) out += "^2";
    }
    return out;
  }

  double evaluate(const Observation& record) const {
    double prod = 1.0;
    for (const auto& f : factors_) {
      const auto it = record.find(f.variable);
      if (it == record.end())
        throw Error("term " + name() + ": missing variable '" + f.variable + "'");
      prod *= (f.power == 2) ? it->second * it->second : it->second;
    }
    return prod;
  }

  bool operator==(const TermDescriptor&) const = default;

 private:
  explicit TermDescriptor(std::vector<Factor> factors) : factors_(std::move(factors)) {}

  std::vector<Factor> factors_;
};

/// Linear terms in declared order, then squares, then pairwise interactions
/// in lexicographic index-pair order: m(m+3)/2 terms for m variables.
inline std::vector<TermDescriptor> expand_terms(std::span<const std::string> variables) {
  if (variables.empty()) throw std::invalid_argument("expand_terms: no variables");
  std::set<std::string> seen;
  for (const auto& v : variables) {
    if (v.empty()) throw std::invalid_argument("expand_terms: empty variable name");
    if (!seen.insert(v).second)
      throw std::invalid_argument("expand_terms: duplicate variable name: " + v);
  }

  const std::size_t m = variables.size();
  std::vector<TermDescriptor> terms;
  terms.reserve(m * (m + 3) / 2);
  for (const auto& v : variables) terms.push_back(TermDescriptor::linear(v));
  for (const auto& v : variables) terms.push_back(TermDescriptor::square(v));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      terms.push_back(TermDescriptor::interaction(variables[i], variables[j]));
  return terms;
}

/// Parses a rendered term name like "W", "p^2", "wW" or "W*P" against a
/// declared variable list. Tokens match the longest variable name first;
/// factor order in the input is irrelevant, the result is canonical.
inline TermDescriptor parse_term_name(std::string_view text,
                                      std::span<const std::string> variables) {
  std::vector<std::string> by_length(variables.begin(), variables.end());
  std::stable_sort(by_length.begin(), by_length.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });

  std::map<std::string, int> powers;
  std::string_view rest = text;
  while (!rest.empty()) {
    if (rest.front() == '*' || rest.front() == ' ') {
      rest.remove_prefix(1);
      continue;
    }
    std::string matched;
    for (const auto& v : by_length) {
      if (rest.substr(0, v.size()) == v) {
        matched = v;
        break;
      }
    }
    if (matched.empty())
      throw Error("unknown variable at '" + std::string(rest) + "' in term '" +
                  std::string(text) + "'");
    rest.remove_prefix(matched.size());
    int power = 1;
    if (!rest.empty() && rest.front() == '^') {
      rest.remove_prefix(1);
      if (rest.empty() || rest.front() < '1' || rest.front() > '9')
        throw Error("malformed exponent in term '" + std::string(text) + "'");
      power = rest.front() - '0';
      rest.remove_prefix(1);
    }
    powers[matched] += power;
  }
  if (powers.empty()) throw Error("empty term name");

  int degree = 0;
  for (const auto& [_, p] : powers) degree += p;
  if (degree < 1 || degree > 2)
    throw Error("term '" + std::string(text) + "' has degree " + std::to_string(degree) +
                "; only 1 or 2 supported");

  if (degree == 1) return TermDescriptor::linear(powers.begin()->first);
  if (powers.size() == 1) return TermDescriptor::square(powers.begin()->first);
  // Two distinct degree-1 factors: order them by declared position.
  auto pos = [&](const std::string& v) {
    return std::find(variables.begin(), variables.end(), v) - variables.begin();
  };
  auto it = powers.begin();
  std::string a = it->first;
  std::string b = std::next(it)->first;
  if (pos(a) > pos(b)) std::swap(a, b);
  return TermDescriptor::interaction(a, b);
}

/// Declared-order variable list recovered from a term set (first appearance).
inline std::vector<std::string> variables_of(std::span<const TermDescriptor> terms) {
  std::vector<std::string> out;
  for (const auto& t : terms)
    for (const auto& f : t.factors())
      if (std::find(out.begin(), out.end(), f.variable) == out.end()) out.push_back(f.variable);
  return out;
}

/// Evaluated term matrix: rows(i, j) = terms[j] evaluated at record i. No
/// centering or scaling is ever applied here.
struct DesignMatrix {
  std::vector<TermDescriptor> terms;
  Matrix rows;
  std::vector<std::string> row_keys;

  std::vector<std::string> term_names() const {
    std::vector<std::string> out;
    out.reserve(terms.size());
    for (const auto& t : terms) out.push_back(t.name());
    return out;
  }

  std::size_t column_of(std::string_view term_name) const {
    for (std::size_t j = 0; j < terms.size(); ++j)
      if (terms[j].name() == term_name) return j;
    throw Error("unknown term name: " + std::string(term_name));
  }
};

inline DesignMatrix evaluate(std::span<const TermDescriptor> terms,
                             std::span<const Observation> records,
                             std::vector<std::string> row_keys = {}) {
  if (terms.empty()) throw std::invalid_argument("evaluate: empty term set");
  if (!row_keys.empty() && row_keys.size() != records.size())
    throw std::invalid_argument("evaluate: row_keys size mismatch");

  DesignMatrix m;
  m.terms.assign(terms.begin(), terms.end());
  m.rows = Matrix(records.size(), terms.size());
  if (row_keys.empty()) {
    m.row_keys.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) m.row_keys.push_back(std::to_string(i));
  } else {
    m.row_keys = std::move(row_keys);
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = 0; j < terms.size(); ++j) {
      double v;
      try {
        v = terms[j].evaluate(records[i]);
      } catch (const Error& e) {
        throw Error("record " + m.row_keys[i] + ": " + e.what());
      }
      if (!std::isfinite(v))
        throw NumericsError("record " + m.row_keys[i] + ": non-finite value for term " +
                            terms[j].name());
      m.rows(i, j) = v;
    }
  }
  return m;
}

/// Column projection preserving row order. An empty selection is rejected;
/// there is no such thing as a zero-term model here.
inline DesignMatrix subset(const DesignMatrix& m, std::span<const std::string> term_names) {
  if (term_names.empty()) throw Error("subset: empty model forbidden");
  std::vector<std::size_t> cols;
  cols.reserve(term_names.size());
  for (const auto& name : term_names) cols.push_back(m.column_of(name));

  DesignMatrix out;
  out.row_keys = m.row_keys;
  out.rows = Matrix(m.rows.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.terms.push_back(m.terms[cols[j]]);
    for (std::size_t i = 0; i < m.rows.rows(); ++i) out.rows(i, j) = m.rows(i, cols[j]);
  }
  return out;
}

inline SymmetricMatrix correlation_matrix(const DesignMatrix& m) {
  const auto names = m.term_names();
  return correlation_matrix(m.rows, names);
}

}  // namespace stormfit
