#pragma once

#include <stdexcept>
#include <string>

namespace selfsim {

/// Invalid user-facing parameter (process parameters, grid sizes, config keys).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical computation could not be completed.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization failed even at the largest jitter level.
class NotPositiveDefiniteError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

/// Monte Carlo budget too small for the requested rare-event estimate.
class BudgetError : public ComputeError {
 public:
  BudgetError(const std::string& what, double required_paths)
      : ComputeError(what), required_paths_(required_paths) {}
  double required_paths() const noexcept { return required_paths_; }

 private:
  double required_paths_;
};

}  // namespace selfsim
