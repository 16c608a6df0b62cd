#include "conveyor/motion_profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "conveyor/errors.hpp"

namespace conveyor {

namespace {

void require_positive(double value, const char* name) {
  if (!(std::isfinite(value) && value > 0.0)) {
    throw ParameterError(std::string(name) + " must be finite and positive");
  }
}

}  // namespace

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::triangle:
      return "triangle";
    case ProfileKind::sine:
      return "sine";
    case ProfileKind::custom:
      return "custom";
  }
  return "unknown";
}

ProfileKind parse_profile_kind(const std::string& text) {
  if (text == "triangle") return ProfileKind::triangle;
  if (text == "sine") return ProfileKind::sine;
  if (text == "custom") return ProfileKind::custom;
  throw ParameterError("unknown profile kind '" + text + "'");
}

VelocityProfile::VelocityProfile(ProfileKind kind, double distance, double trip_time)
    : kind_(kind),
      distance_(distance),
      trip_time_(trip_time),
      max_velocity_(2.0 * distance / trip_time) {}

VelocityProfile VelocityProfile::triangle(double distance, double trip_time) {
  require_positive(distance, "distance");
  require_positive(trip_time, "trip time");
  return VelocityProfile(ProfileKind::triangle, distance, trip_time);
}

VelocityProfile VelocityProfile::sine(double distance, double trip_time) {
  require_positive(distance, "distance");
  require_positive(trip_time, "trip time");
  return VelocityProfile(ProfileKind::sine, distance, trip_time);
}

VelocityProfile VelocityProfile::custom(std::vector<double> times, std::vector<double> velocities) {
  if (times.size() != velocities.size() || times.size() < 2) {
    throw ParameterError("custom profile needs at least two (time, velocity) samples");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw ParameterError("custom profile times must be strictly increasing");
    }
  }
  if (velocities.front() != 0.0 || velocities.back() != 0.0) {
    throw ParameterError("custom profile must start and end at zero velocity");
  }
  const double t0 = times.front();
  for (auto& t : times) t -= t0;

  double distance = 0.0;
  double peak = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    distance += 0.5 * (velocities[i] + velocities[i - 1]) * (times[i] - times[i - 1]);
  }
  for (double v : velocities) peak = std::max(peak, std::abs(v));
  if (!(std::abs(distance) > 0.0)) throw ParameterError("custom profile covers no distance");

  VelocityProfile profile(ProfileKind::custom, distance, times.back());
  profile.max_velocity_ = peak;
  profile.times_ = std::move(times);
  profile.velocities_ = std::move(velocities);
  return profile;
}

VelocityProfile VelocityProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open velocity profile " + path.string());
  std::vector<double> times, velocities;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    double t = 0.0, v = 0.0;
    if (!(fields >> t >> v)) {
      throw ParameterError(path.string() + ":" + std::to_string(line_no) +
                           ": expected 'time velocity'");
    }
    times.push_back(t);
    velocities.push_back(v);
  }
  return custom(std::move(times), std::move(velocities));
}

double VelocityProfile::velocity(double t) const {
  if (t <= 0.0 || t >= trip_time_) return 0.0;
  switch (kind_) {
    case ProfileKind::triangle: {
      const double half = 0.5 * trip_time_;
      return max_velocity_ * (t <= half ? t / half : (trip_time_ - t) / half);
    }
    case ProfileKind::sine: {
      const double s = std::sin(std::numbers::pi * t / trip_time_);
      return max_velocity_ * s * s;
    }
    case ProfileKind::custom: {
      const auto upper = std::upper_bound(times_.begin(), times_.end(), t);
      const auto i = static_cast<std::size_t>(upper - times_.begin());
      const double f = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
      return velocities_[i - 1] + f * (velocities_[i] - velocities_[i - 1]);
    }
  }
  return 0.0;
}

double VelocityProfile::acceleration(double t) const {
  if (t < 0.0 || t >= trip_time_) return 0.0;
  switch (kind_) {
    case ProfileKind::triangle: {
      const double slope = 2.0 * max_velocity_ / trip_time_;
      return t < 0.5 * trip_time_ ? slope : -slope;
    }
    case ProfileKind::sine:
      return max_velocity_ * std::numbers::pi / trip_time_ *
             std::sin(2.0 * std::numbers::pi * t / trip_time_);
    case ProfileKind::custom: {
      const auto upper = std::upper_bound(times_.begin(), times_.end(), t);
      const auto i = static_cast<std::size_t>(upper - times_.begin());
      return (velocities_[i] - velocities_[i - 1]) / (times_[i] - times_[i - 1]);
    }
  }
  return 0.0;
}

double VelocityProfile::peak_acceleration() const {
  switch (kind_) {
    case ProfileKind::triangle:
      return 4.0 * distance_ / (trip_time_ * trip_time_);
    case ProfileKind::sine:
      return 2.0 * std::numbers::pi * distance_ / (trip_time_ * trip_time_);
    case ProfileKind::custom: {
      double peak = 0.0;
      for (std::size_t i = 1; i < times_.size(); ++i) {
        peak = std::max(peak, std::abs((velocities_[i] - velocities_[i - 1]) /
                                       (times_[i] - times_[i - 1])));
      }
      return peak;
    }
  }
  return 0.0;
}

std::size_t VelocityProfile::acceleration_discontinuities() const {
  switch (kind_) {
    case ProfileKind::triangle:
      return 3;
    case ProfileKind::sine:
      return 0;
    case ProfileKind::custom: {
      std::size_t jumps = 0;
      double previous = 0.0;
      for (std::size_t i = 1; i <= times_.size(); ++i) {
        const double slope = i < times_.size() ? (velocities_[i] - velocities_[i - 1]) /
                                                     (times_[i] - times_[i - 1])
                                               : 0.0;
        if (slope != previous) ++jumps;
        previous = slope;
      }
      return jumps;
    }
  }
  return 0;
}

double min_transport_time(ProfileKind kind, double distance, double max_acceleration) {
  require_positive(distance, "distance");
  require_positive(max_acceleration, "maximum acceleration");
  switch (kind) {
    case ProfileKind::sine:
      return std::sqrt(2.0 * std::numbers::pi * distance / max_acceleration);
    case ProfileKind::triangle:
      return std::sqrt(4.0 * distance / max_acceleration);
    case ProfileKind::custom:
      break;
  }
  throw ParameterError("minimum transport time has no closed form for custom profiles");
}

double aom_frequency_difference(double velocity, double wavelength) {
  require_positive(wavelength, "wavelength");
  return 2.0 * velocity / wavelength;
}

double BoostSchedule::max_abs_boost() const {
  double peak = 0.0;
  for (double dv : boosts) peak = std::max(peak, std::abs(dv));
  return peak;
}

std::vector<double> BoostSchedule::cumulative_velocity() const {
  std::vector<double> v(boosts.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < boosts.size(); ++i) {
    sum += boosts[i];
    v[i] = sum;
  }
  return v;
}

double BoostSchedule::net_displacement() const {
  double x = 0.0;
  for (double v : cumulative_velocity()) x += v;
  return x * dt;
}

BoostSchedule discretize(const VelocityProfile& profile, const TripPlan& plan,
                         const Stepping& stepping) {
  if (plan.n_traversals < 1) throw ParameterError("trip plan needs at least one traversal");
  if (!(plan.pause >= 0.0)) throw ParameterError("pause must be non-negative");

  const double trip = profile.trip_time();
  std::size_t steps = 0;
  if (const auto* rate = std::get_if<DdsRate>(&stepping)) {
    require_positive(rate->hz, "DDS update rate");
    steps = static_cast<std::size_t>(std::floor(rate->hz * trip * (1.0 + 1e-12)));
  } else {
    steps = std::get<StepsPerTraversal>(stepping).count;
  }
  if (steps < 4) {
    throw ParameterError("a traversal needs at least 4 steps, got " + std::to_string(steps));
  }

  BoostSchedule schedule;
  schedule.dt = trip / static_cast<double>(steps);
  schedule.steps_per_traversal = steps;
  schedule.effective_dds_rate = static_cast<double>(steps) / trip;

  // Target velocities at the right endpoints; the last one is exactly zero so
  // every traversal telescopes back to rest.
  std::vector<double> one_way(steps);
  double previous = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double v = i == steps ? 0.0 : profile.velocity(static_cast<double>(i) * schedule.dt);
    one_way[i - 1] = v - previous;
    previous = v;
    schedule.peak_velocity = std::max(schedule.peak_velocity, std::abs(v));
  }

  const auto pause_steps =
      static_cast<std::size_t>(std::llround(plan.pause / schedule.dt));
  schedule.boosts.reserve(plan.n_traversals * (steps + pause_steps));
  for (std::size_t k = 0; k < plan.n_traversals; ++k) {
    if (k > 0) schedule.boosts.insert(schedule.boosts.end(), pause_steps, 0.0);
    const double sign = plan.direction(k);
    for (double dv : one_way) schedule.boosts.push_back(sign * dv);
  }
  return schedule;
}

}  // namespace conveyor
