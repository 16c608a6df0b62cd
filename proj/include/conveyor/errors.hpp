#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace conveyor {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates the documented precondition of an operation.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Lookup outside the range an operator table was built for.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// |m a| > k U0: the tilted lattice no longer has potential minima.
class MaxAccelerationExceeded : public Error {
 public:
  MaxAccelerationExceeded(double acceleration, double limit);

  double acceleration() const { return acceleration_; }
  double limit() const { return limit_; }

 private:
  double acceleration_;
  double limit_;
};

/// A numerical self-check failed (grid too coarse, table inaccurate, ...).
class VerificationError : public Error {
 public:
  VerificationError(const std::string& what, double measured)
      : Error(what), measured_(measured) {}

  double measured() const { return measured_; }

 private:
  double measured_;
};

/// One or more problems found while validating a scenario configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace conveyor
