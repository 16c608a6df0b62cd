#include <doctest.h>

#include <cmath>
#include <numbers>

#include "conveyor/dephasing_estimate.hpp"
#include "conveyor/errors.hpp"
#include "support.hpp"

using namespace conveyor;
using testing::default_params;

TEST_CASE("depth excursion") {
  const auto ex = depth_excursion(default_params(), 40e-6);
  const double kt2 = 0.5 * constants::boltzmann * 40e-6;
  CHECK(ex.depth_min == doctest::Approx(default_params().trap_depth() - kt2));
  CHECK(ex.depth_max == doctest::Approx(default_params().trap_depth() + kt2));
  CHECK(ex.omega_min < default_params().harmonic_angular_frequency());
  CHECK(ex.omega_max > default_params().harmonic_angular_frequency());
  CHECK(ex.delta_omega == doctest::Approx(ex.omega_max - ex.omega_min));
  // omega scales as sqrt(U0)
  CHECK(ex.omega_max / ex.omega_min ==
        doctest::Approx(std::sqrt(ex.depth_max / ex.depth_min)).epsilon(1e-12));
  CHECK_THROWS_AS(depth_excursion(default_params(), -1e-6), ParameterError);
  CHECK_THROWS_AS(depth_excursion(default_params(), 600e-6), ParameterError);
}

TEST_CASE("phase integral") {
  const double w = constants::two_pi * 1.6e3;
  // one half-arch of |sin(2 w t)| spans pi / (2 w) and contributes A / w
  CHECK(phase_integral(3.0, w, std::numbers::pi / (2 * w)) == doctest::Approx(3.0 / w));
  CHECK(phase_integral(3.0, w, 5 * std::numbers::pi / (2 * w)) == doctest::Approx(15.0 / w));
  CHECK(phase_integral(3.0, w, 0.0) == 0.0);
  // quarter arch: A / (2 w) (1 - cos(pi / 2))
  CHECK(phase_integral(3.0, w, std::numbers::pi / (4 * w)) == doctest::Approx(1.5 / w));
}

TEST_CASE("gamma0 estimate for the default trap") {
  const auto full = estimate_gamma0(default_params(), {});
  CHECK(full.gamma0 / constants::two_pi == doctest::Approx(2720.21).epsilon(1e-4));
  CHECK(full.tau == doctest::Approx(58.5084e-6).epsilon(1e-4));
  CHECK(full.delta_omega0 / constants::two_pi == doctest::Approx(16327.1).epsilon(1e-4));
  CHECK(full.residual < 1e-12);
  CHECK_FALSE(full.diverged);
  CHECK(phase_integral(full.delta_omega0, constants::two_pi * 1.6e3, full.tau) ==
        doctest::Approx(std::numbers::pi).epsilon(1e-12));

  const auto half = estimate_gamma0(default_params(), {}, AmplitudeConvention::half);
  CHECK(half.gamma0 / constants::two_pi == doctest::Approx(1773.46).epsilon(1e-4));
  CHECK(half.delta_omega0 == doctest::Approx(0.5 * full.delta_omega0));
  CHECK(half.tau > full.tau);
}

TEST_CASE("gamma0 limits") {
  TransverseParams cold{constants::two_pi * 1.6e3, 1e-12};
  const auto e = estimate_gamma0(default_params(), cold);
  CHECK(e.diverged);
  CHECK(e.gamma0 < 1.0);
  TransverseParams zero{constants::two_pi * 1.6e3, 0.0};
  CHECK_THROWS_AS(estimate_gamma0(default_params(), zero), ParameterError);
  CHECK_THROWS_AS(estimate_gamma0(default_params(), {0.0, 40e-6}), ParameterError);
  CHECK_THROWS_AS(estimate_gamma0(default_params(), {1e4, 1.0}), ParameterError);
}
