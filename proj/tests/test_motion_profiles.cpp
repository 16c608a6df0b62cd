#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include "conveyor/errors.hpp"
#include "conveyor/motion_profiles.hpp"
#include "support.hpp"

using namespace conveyor;

namespace {
constexpr double dx = 0.2e-3;
}

TEST_CASE("aom frequency difference") {
  CHECK(aom_frequency_difference(0.4, 1064e-9) == doctest::Approx(751.88e3).epsilon(1e-4));
  CHECK(aom_frequency_difference(-0.4, 1064e-9) == doctest::Approx(-751.88e3).epsilon(1e-4));
  CHECK(aom_frequency_difference(0.0, 1064e-9) == 0.0);
  CHECK_THROWS_AS(aom_frequency_difference(1.0, 0.0), ParameterError);
}

TEST_CASE("profile shapes") {
  const double dt = 1e-3;
  const auto sine = VelocityProfile::sine(dx, dt);
  const auto tri = VelocityProfile::triangle(dx, dt);
  CHECK(sine.max_velocity() == doctest::Approx(0.4));
  CHECK(tri.max_velocity() == doctest::Approx(0.4));
  CHECK(sine.velocity(0.0) == doctest::Approx(0.0));
  CHECK(sine.velocity(dt) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sine.velocity(dt / 2) == doctest::Approx(0.4));
  CHECK(tri.velocity(dt / 4) == doctest::Approx(0.2));
  CHECK(sine.peak_acceleration() == doctest::Approx(std::numbers::pi * 0.4 / dt));
  CHECK(tri.peak_acceleration() == doctest::Approx(0.8 / dt));
  CHECK(tri.acceleration_discontinuities() == 3);
  CHECK(sine.acceleration_discontinuities() == 0);
  CHECK(tri.acceleration(0.75 * dt) == doctest::Approx(-0.8 / dt));
  CHECK(sine.acceleration(0.0) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("invalid profile arguments") {
  CHECK_THROWS_AS(VelocityProfile::sine(dx, 0.0), ParameterError);
  CHECK_THROWS_AS(VelocityProfile::triangle(-dx, 1e-3), ParameterError);
  CHECK_THROWS_AS(VelocityProfile::custom({0.0, 1.0}, {0.0, 1.0}), ParameterError);
  CHECK_THROWS_AS(VelocityProfile::custom({0.0, 0.0, 1.0}, {0.0, 1.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(VelocityProfile::custom({0.0}, {0.0}), ParameterError);
  CHECK_THROWS_AS(parse_profile_kind("square"), ParameterError);
  CHECK(parse_profile_kind("sine") == ProfileKind::sine);
  CHECK(to_string(ProfileKind::triangle) == "triangle");
}

TEST_CASE("minimum transport time") {
  const double a_max = testing::default_params().max_acceleration();
  const double sine = min_transport_time(ProfileKind::sine, dx, a_max);
  const double tri = min_transport_time(ProfileKind::triangle, dx, a_max);
  CHECK(tri == doctest::Approx(0.075e-3).epsilon(0.01));
  CHECK(sine == doctest::Approx(0.0936e-3).epsilon(0.01));
  CHECK(VelocityProfile::sine(dx, sine).peak_acceleration() == doctest::Approx(a_max));
  CHECK(VelocityProfile::triangle(dx, tri).peak_acceleration() == doctest::Approx(a_max));
  CHECK_THROWS_AS(min_transport_time(ProfileKind::custom, dx, a_max), ParameterError);
}

TEST_CASE("custom profiles") {
  const auto p = VelocityProfile::custom({1.0e-3, 1.5e-3, 2.0e-3}, {0.0, 0.4, 0.0});
  CHECK(p.trip_time() == doctest::Approx(1e-3));
  CHECK(p.distance() == doctest::Approx(dx));
  CHECK(p.velocity(0.25e-3) == doctest::Approx(0.2));
  CHECK(p.acceleration(0.1e-3) == doctest::Approx(800.0));

  const auto path = std::filesystem::temp_directory_path() / "conveyor_profile_test.txt";
  {
    std::ofstream f(path);
    f << "# t v\n0 0\n0.0005 0.4\n\n0.001 0\n";
  }
  const auto loaded = VelocityProfile::load(path);
  CHECK(loaded.kind() == ProfileKind::custom);
  CHECK(loaded.velocity(0.25e-3) == doctest::Approx(0.2));
  {
    std::ofstream f(path);
    f << "0 0\nabc 0.4\n0.001 0\n";
  }
  CHECK_THROWS_AS(VelocityProfile::load(path), ParameterError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(VelocityProfile::load(path), ParameterError);
}

TEST_CASE("discretized schedules return to rest and cover the distance") {
  for (auto kind : {ProfileKind::sine, ProfileKind::triangle}) {
    for (std::size_t steps : {4, 7, 200, 1001}) {
      const auto profile = kind == ProfileKind::sine ? VelocityProfile::sine(dx, 0.5e-3)
                                                     : VelocityProfile::triangle(dx, 0.5e-3);
      const auto s = discretize(profile, {3, 0.0}, StepsPerTraversal{steps});
      CHECK(s.size() == 3 * steps);
      const double total = std::accumulate(s.boosts.begin(), s.boosts.end(), 0.0);
      CHECK(std::abs(total) < 1e-15);
      CHECK(s.dt * static_cast<double>(steps) == doctest::Approx(0.5e-3));
      // three traversals alternate direction, so the net displacement is one
      // traversal; the right-endpoint sum is exact unless a triangle peak
      // falls between samples
      const double n = static_cast<double>(steps);
      const double tol = kind == ProfileKind::sine || steps % 2 == 0 ? 1e-9 : 1.0 / (n * n);
      const auto one = discretize(profile, {1, 0.0}, StepsPerTraversal{steps});
      CHECK(one.net_displacement() == doctest::Approx(dx).epsilon(tol));
      CHECK(s.net_displacement() == doctest::Approx(dx).epsilon(tol));
    }
  }
}

TEST_CASE("dds rate stepping") {
  const auto profile = VelocityProfile::sine(dx, 1e-3);
  const auto s = discretize(profile, {2, 0.0}, DdsRate{250.5e3});
  CHECK(s.steps_per_traversal == 250);
  CHECK(s.dt == doctest::Approx(4e-6));
  CHECK(s.effective_dds_rate == doctest::Approx(250e3));
  CHECK_THROWS_AS(discretize(profile, {1, 0.0}, DdsRate{3e3}), ParameterError);
  CHECK_THROWS_AS(discretize(profile, {1, 0.0}, DdsRate{0.0}), ParameterError);
  CHECK_THROWS_AS(discretize(profile, {0, 0.0}, StepsPerTraversal{10}), ParameterError);
}

TEST_CASE("pauses and directions") {
  const auto profile = VelocityProfile::triangle(dx, 1e-3);
  const auto s = discretize(profile, TripPlan::round_trips(1, 0.1e-3), StepsPerTraversal{100});
  CHECK(s.size() == 200 + 10);
  for (std::size_t i = 100; i < 110; ++i) CHECK(s.boosts[i] == 0.0);
  CHECK(s.boosts[0] > 0.0);
  CHECK(s.boosts[110] < 0.0);
  CHECK(s.boosts[0] == -s.boosts[110]);
  const auto v = s.cumulative_velocity();
  CHECK(*std::max_element(v.begin(), v.end()) == doctest::Approx(s.peak_velocity));
  CHECK(s.peak_velocity == doctest::Approx(0.4));
  CHECK(s.max_abs_acceleration() == doctest::Approx(0.8 / 1e-3).epsilon(1e-9));
}
