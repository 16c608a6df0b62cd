#include "conveyor/errors.hpp"

#include <sstream>

namespace conveyor {

namespace {

std::string describe_acceleration(double acceleration, double limit) {
  std::ostringstream out;
  out << "acceleration " << acceleration << " m/s^2 exceeds the lattice limit " << limit
      << " m/s^2";
  return out.str();
}

std::string join_problems(const std::vector<std::string>& problems) {
  std::string text = "invalid configuration";
  for (const auto& p : problems) {
    text += "\n  - " + p;
  }
  return text;
}

}  // namespace

MaxAccelerationExceeded::MaxAccelerationExceeded(double acceleration, double limit)
    : Error(describe_acceleration(acceleration, limit)),
      acceleration_(acceleration),
      limit_(limit) {}

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace conveyor
