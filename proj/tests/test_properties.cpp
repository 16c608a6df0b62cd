#include <doctest.h>

#include <random>

#include "conveyor/density_evolution.hpp"
#include "conveyor/scenario.hpp"
#include "support.hpp"

using namespace conveyor;

TEST_CASE("randomized evolutions stay physical") {
  std::mt19937_64 rng(20211);
  std::uniform_real_distribution<double> trip_ms(0.1, 1.0);
  std::uniform_real_distribution<double> gamma_kHz(0.0, 5.0);
  std::uniform_int_distribution<int> steps(20, 300);
  std::uniform_int_distribution<int> n_eff(4, 33);
  const auto& s = testing::default_spectrum();

  for (int trial = 0; trial < 12; ++trial) {
    SimulationConfig cfg;
    cfg.n_eff = static_cast<std::size_t>(n_eff(rng));
    cfg.gamma0 = constants::two_pi * gamma_kHz(rng) * 1e3;
    cfg.initial = trial % 3 == 0 ? InitialCondition::ground() : InitialCondition::thermal(40e-6);
    cfg.record_trajectory = true;
    const auto profile = trial % 2 ? VelocityProfile::triangle(0.2e-3, trip_ms(rng) * 1e-3)
                                   : VelocityProfile::sine(0.2e-3, trip_ms(rng) * 1e-3);
    const auto sched = discretize(profile, {2, 0.0},
                                  StepsPerTraversal{static_cast<std::size_t>(steps(rng))});
    const auto tables = build_operator_tables(s, cfg.n_eff, {sched}, 1e-6, nullptr);
    const auto r = evolve(cfg, s, sched, tables);
    CAPTURE(trial);
    if (r.exceeded_at_step) {
      CHECK(r.retention == 0.0);
      continue;
    }
    const MotionalDensityMatrix rho(r.rho_final);
    CHECK(rho.hermiticity_error() < 1e-14);
    CHECK(rho.min_eigenvalue() > -1e-9);
    CHECK(r.retention <= 1.0 + 1e-9);
    CHECK(r.populations.minCoeff() > -1e-12);
    for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
      CHECK(r.trajectory[i].retention <= r.trajectory[i - 1].retention + 1e-9);
    }
  }
}
