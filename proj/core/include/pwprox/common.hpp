#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace pwprox {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Raised when a piecewise model, problem or configuration is malformed.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a meaningful result
/// (non-finite objective, failed bracketing, inconsistent metadata).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pwprox
