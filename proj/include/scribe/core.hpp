#pragma once

// Shared numeric types, error categories and log-space helpers.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scribe {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Index into an Alphabet; the blank is the index one past the last symbol.
using Label = int;
using LabelSequence = std::vector<Label>;

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Bad configuration or API misuse (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss (CLI exit code 3).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double log_sum_exp(std::span<const double> values) {
  double peak = kLogZero;
  for (double v : values) peak = std::max(peak, v);
  if (peak == kLogZero) return kLogZero;
  if (std::isinf(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace scribe
