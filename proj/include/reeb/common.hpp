#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace reeb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  Internal = 1,
  Validation = 2,
  Numerical = 3,
  Undetermined = 4,
};

/// Exception carrying a category and an optional witness (free-form text,
/// usually a JSON fragment naming the offending sample).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string witness = {})
      : std::runtime_error(what), kind_(kind), witness_(std::move(witness)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& witness() const noexcept { return witness_; }

 private:
  ErrorKind kind_;
  std::string witness_;
};

[[noreturn]] inline void fail_validation(const std::string& what) {
  throw Error(ErrorKind::Validation, what);
}
[[noreturn]] inline void fail_numerical(const std::string& what, std::string witness = {}) {
  throw Error(ErrorKind::Numerical, what, std::move(witness));
}

/// Standard rotation by +90 degrees on a 2-plane.
inline Mat2 rot90() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

inline Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

/// Evenly spaced samples including both endpoints.
inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

/// Geometrically spaced samples from a to b (both > 0), endpoints included.
inline std::vector<double> geomspace(double a, double b, std::size_t n) {
  auto logs = linspace(std::log(a), std::log(b), n);
  for (auto& x : logs) x = std::exp(x);
  return logs;
}

}  // namespace reeb
