#pragma once

#include <stdexcept>

namespace lqgame {

/// Numerical failure inside a solver or estimator (divergence, singular
/// matrix, undefined metric).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The data does not pin down the quantity being estimated: rank-deficient
/// stacked system, degenerate noise covariance, indefinite recovered weights.
struct IdentifiabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File or stream problem while reading/writing artifacts.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lqgame
