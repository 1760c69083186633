#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vids {

/// Invalid configuration or out-of-contract input. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure while a run is in progress (numerics, data, I/O). The CLI maps this to exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A covariance that could not be factorized even after jitter escalation.
class NumericalError : public RuntimeError {
 public:
  NumericalError(const std::string& what, Eigen::MatrixXd matrix)
      : RuntimeError(what), matrix_(std::move(matrix)) {}

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
};

}  // namespace vids
