#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace conveyor {

enum class ProfileKind { triangle, sine, custom };

std::string to_string(ProfileKind kind);
/// Accepts "triangle", "sine", "custom"; throws ParameterError otherwise.
ProfileKind parse_profile_kind(const std::string& text);

/// One-way conveyor velocity waveform v(t) on [0, trip_time].
class VelocityProfile {
 public:
  /// Linear ramp to v_max = 2 dx / dt at the midpoint and back down.
  static VelocityProfile triangle(double distance, double trip_time);
  /// v(t) = v_max sin^2(pi t / trip_time), v_max = 2 dx / dt.
  static VelocityProfile sine(double distance, double trip_time);
  /// Piecewise-linear through the samples. Times strictly increasing, first
  /// and last velocity zero; the time axis is shifted to start at 0.
  static VelocityProfile custom(std::vector<double> times, std::vector<double> velocities);
  /// Two whitespace-separated columns: time (s), velocity (m/s). Lines
  /// starting with '#' are ignored.
  static VelocityProfile load(const std::filesystem::path& path);

  ProfileKind kind() const { return kind_; }
  double distance() const { return distance_; }
  double trip_time() const { return trip_time_; }
  double max_velocity() const { return max_velocity_; }

  double velocity(double t) const;
  /// One-sided (right) derivative; piecewise slope for custom profiles.
  double acceleration(double t) const;
  double peak_acceleration() const;
  /// Points in [0, trip_time] where the acceleration jumps.
  std::size_t acceleration_discontinuities() const;

 private:
  VelocityProfile(ProfileKind kind, double distance, double trip_time);

  ProfileKind kind_;
  double distance_;
  double trip_time_;
  double max_velocity_;
  std::vector<double> times_;
  std::vector<double> velocities_;
};

/// Shortest one-way trip time that keeps the peak acceleration at a_max:
/// sine sqrt(2 pi dx / a_max), triangle sqrt(4 dx / a_max).
/// Throws ParameterError for custom profiles.
double min_transport_time(ProfileKind kind, double distance, double max_acceleration);

/// AOM detuning that moves the lattice at velocity v: df = 2 v / lambda.
double aom_frequency_difference(double velocity, double wavelength);

/// Back-and-forth motion: traversal k runs in direction +1 for even k and -1
/// for odd k.
struct TripPlan {
  std::size_t n_traversals = 1;
  double pause = 0.0;  // s, held at zero velocity between traversals

  static TripPlan round_trips(std::size_t n, double pause = 0.0) { return {2 * n, pause}; }
  int direction(std::size_t traversal) const { return traversal % 2 == 0 ? 1 : -1; }
};

struct DdsRate {
  double hz;
};
struct StepsPerTraversal {
  std::size_t count;
};
using Stepping = std::variant<DdsRate, StepsPerTraversal>;

/// Staircase of frame boosts applied every dt.
struct BoostSchedule {
  double dt = 0.0;
  std::vector<double> boosts;  // m/s
  std::size_t steps_per_traversal = 0;
  double effective_dds_rate = 0.0;  // 1 / dt
  double peak_velocity = 0.0;       // max |cumulative velocity|

  std::size_t size() const { return boosts.size(); }
  double acceleration(std::size_t i) const { return boosts[i] / dt; }
  double max_abs_boost() const;
  double max_abs_acceleration() const { return max_abs_boost() / dt; }
  std::vector<double> cumulative_velocity() const;
  /// dt * sum of the velocity held after each boost.
  double net_displacement() const;
};

/// Samples the profile at right endpoints t_i = i dt of every traversal and
/// turns the differences into boosts. With a DDS rate, the step count is
/// floor(f dt) and dt is rescaled so the traversal lasts exactly trip_time.
/// Throws ParameterError if a traversal gets fewer than 4 steps.
BoostSchedule discretize(const VelocityProfile& profile, const TripPlan& plan,
                         const Stepping& stepping);

}  // namespace conveyor
