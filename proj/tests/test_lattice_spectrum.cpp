#include <doctest.h>

#include <cmath>

#include "conveyor/errors.hpp"
#include "conveyor/grid_oracle.hpp"
#include "support.hpp"

using namespace conveyor;
using testing::default_params;
using testing::default_spectrum;
using testing::microkelvin;

namespace {

// Number of eigenvalues below zero of the hard-wall finite-difference
// Hamiltonian, by Sylvester inertia of the LDL^T pivots.
std::size_t sturm_negative_count(const PhysicalParams& p, const SpatialGrid& grid) {
  const double h = grid.spacing();
  const double t = constants::hbar * constants::hbar / (2.0 * p.atomic_mass() * h * h);
  std::size_t negative = 0;
  double pivot = 0.0;
  for (std::size_t j = 1; j + 1 < grid.size(); ++j) {
    const double d = 2.0 * t + site_potential(p, grid.position(j));
    pivot = j == 1 ? d : d - t * t / pivot;
    if (pivot < 0.0) ++negative;
  }
  return negative;
}

}  // namespace

TEST_CASE("trap constants at the default depth") {
  const TrapConstants tc = trap_constants(default_params());
  CHECK(tc.frequency == doctest::Approx(207e3).epsilon(1e3 / 207e3));
  CHECK(tc.max_acceleration == doctest::Approx(1.43e5).epsilon(0.01));
  CHECK(tc.angular_frequency == doctest::Approx(constants::two_pi * tc.frequency));
}

TEST_CASE("trap constants scale with depth") {
  const auto p1 = PhysicalParams::rb87_1064nm(254.0);
  const auto p4 = PhysicalParams::rb87_1064nm(4 * 254.0);
  CHECK(p4.harmonic_angular_frequency() == doctest::Approx(2 * p1.harmonic_angular_frequency()));
  CHECK(p4.max_acceleration() == doctest::Approx(4 * p1.max_acceleration()));
}

TEST_CASE("invalid physical parameters are rejected") {
  CHECK_THROWS_AS(PhysicalParams(0.0, constants::rb87_mass, 1e-27), ParameterError);
  CHECK_THROWS_AS(PhysicalParams(1064e-9, -1.0, 1e-27), ParameterError);
  CHECK_THROWS_AS(PhysicalParams(1064e-9, constants::rb87_mass, NAN), ParameterError);
  CHECK_THROWS_AS(SpatialGrid(1e-6, 4), ParameterError);
  CHECK_THROWS_AS(SpatialGrid(1e-6, 3), ParameterError);
}

TEST_CASE("grid narrower than the site is rejected") {
  const SpatialGrid narrow(0.5 * default_params().site_half_width(), 501);
  CHECK_THROWS_AS(solve_bound_spectrum(default_params(), narrow), ParameterError);
}

TEST_CASE("bound-state count matches an inertia count on a 4x grid") {
  const auto& s = default_spectrum();
  CHECK(s.n_bound() == 33);
  CHECK(sturm_negative_count(default_params(), s.grid) == s.n_bound());
  CHECK(sturm_negative_count(default_params(), s.grid.refined(4)) == 33);
}

TEST_CASE("lowest level spacing") {
  const auto& s = default_spectrum();
  const double spacing = s.level_spacing(0);
  CHECK(spacing / microkelvin == doctest::Approx(10.0).epsilon(0.15));
  // frozen from the default 2001-point grid
  CHECK(spacing / microkelvin == doctest::Approx(9.84504).epsilon(1e-5));
  CHECK(s.energies[0] / microkelvin == doctest::Approx(-249.053).epsilon(1e-5));
  // spacing as a frequency sits within 2% of 207 kHz
  const double f = spacing / (constants::two_pi * constants::hbar);
  CHECK(f == doctest::Approx(207e3).epsilon(0.02));
}

TEST_CASE("energies agree with an independent Fourier-grid eigensolver") {
  const auto& s = default_spectrum();
  const GridOracle oracle(default_params());
  REQUIRE(oracle.n_bound() == s.n_bound());
  const double u0 = default_params().trap_depth();
  for (std::size_t i = 0; i < 28; ++i) {
    // both measured from the well bottom
    const double a = s.energies[i] + u0;
    const double b = oracle.energies()[i] + u0;
    CHECK(std::abs(a - b) / b < 2e-3);
  }
}

TEST_CASE("eigenfunctions are orthonormal under the trapezoidal rule") {
  const auto& s = default_spectrum();
  const double h = s.grid.spacing();
  Eigen::MatrixXd gram = s.eigenfunctions.transpose() * s.eigenfunctions * h;
  // trapezoid end corrections vanish: the wall samples are zero
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK(s.eigenfunctions.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.eigenfunctions.row(s.grid.size() - 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("eigenfunction parity alternates") {
  const auto& s = default_spectrum();
  const auto n = static_cast<Eigen::Index>(s.grid.size());
  for (std::size_t i = 0; i < s.n_bound(); ++i) {
    const Eigen::VectorXd psi = s.eigenfunctions.col(static_cast<Eigen::Index>(i));
    const Eigen::VectorXd mirrored = psi.reverse();
    const double sign = i % 2 == 0 ? 1.0 : -1.0;  // zero-based: even index = even function
    CHECK((psi - sign * mirrored).cwiseAbs().maxCoeff() < 1e-8 * psi.cwiseAbs().maxCoeff());
    (void)n;
  }
}

TEST_CASE("energies are strictly increasing and negative") {
  const auto& s = default_spectrum();
  CHECK(s.energies.back() < 0.0);
  CHECK(s.energies.front() > -default_params().trap_depth());
  for (std::size_t i = 1; i < s.n_bound(); ++i) CHECK(s.energies[i] > s.energies[i - 1]);
}

TEST_CASE("deep-well limit approaches the harmonic spacing") {
  const auto p = PhysicalParams::rb87_1064nm(8 * 254.0);
  const auto s = solve_bound_spectrum(p, SpatialGrid::for_site(p));
  const double ratio = s.level_spacing(0) / (constants::hbar * p.harmonic_angular_frequency());
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("refinement drift stays below 0.1 percent") {
  const ConvergenceReport r = refinement_drift(default_spectrum());
  CHECK(r.compared_levels == 33);
  CHECK(r.max_relative_drift < 1e-3);
  CHECK(r.max_relative_drift == doctest::Approx(2.1e-4).epsilon(0.1));
  CHECK_NOTHROW(solve_bound_spectrum_checked(default_params(), SpatialGrid::for_site(default_params())));
}

TEST_CASE("a coarse grid fails the refinement check") {
  const auto& p = default_params();
  CHECK_THROWS_AS(solve_bound_spectrum_checked(p, SpatialGrid::for_site(p, 101)),
                  VerificationError);
}

TEST_CASE("trapezoid rule") {
  const std::vector<double> v = {0.0, 1.0, 2.0, 3.0};
  CHECK(trapezoid(v, 0.5) == doctest::Approx(2.25));
}
