#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ppil {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid inputs, shapes or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine failed to reach its tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Tolerances used when validating probability objects.
inline constexpr double kConstructionTol = 1e-12;
inline constexpr double kDerivedTol = 1e-10;

}  // namespace ppil
