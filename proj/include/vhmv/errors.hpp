#pragma once

#include <stdexcept>
#include <string>

namespace vhmv {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical scheme failed (NaN, non-convergence, missed tolerance).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Riccati-Volterra solution left the blow-up threshold. The explosion time
/// lies in (last_finite_time, blow_up_time].
class ExplosionError : public NumericError {
public:
  ExplosionError(const std::string& what, double last_finite_time, double blow_up_time)
      : NumericError(what), last_finite_time_(last_finite_time), blow_up_time_(blow_up_time) {}

  double last_finite_time() const noexcept { return last_finite_time_; }
  double blow_up_time() const noexcept { return blow_up_time_; }

private:
  double last_finite_time_;
  double blow_up_time_;
};

/// Bad or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Two routes to the same quantity disagree beyond tolerance.
class ConsistencyError : public NumericError {
public:
  using NumericError::NumericError;
};

}  // namespace vhmv
