#pragma once

#include <stdexcept>
#include <string>

namespace mldp {

/// Invalid parameters or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dimension or grid mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative solver failed to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Non-finite value produced while evaluating an operator.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double state_norm)
      : std::runtime_error(what), state_norm_(state_norm) {}
  double state_norm() const noexcept { return state_norm_; }

 private:
  double state_norm_;
};

}  // namespace mldp
