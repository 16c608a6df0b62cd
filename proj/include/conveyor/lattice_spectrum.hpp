#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "conveyor/physical_params.hpp"

namespace conveyor {

/// U(z) = -U0 cos^2(kz) inside |z| <= pi/(2k), zero outside.
double site_potential(const PhysicalParams& params, double z);

/// Potential sampled on every grid point (J).
std::vector<double> build_potential(const PhysicalParams& params, const SpatialGrid& grid);

/// Bound eigenpairs (E < 0) of the single-site Hamiltonian.
///
/// Eigenfunctions are real, stored column-wise on the grid, normalized so the
/// trapezoidal integral of psi_i psi_j equals delta_ij. Their sign is fixed so
/// that the largest-magnitude sample on z >= 0 is positive.
struct BoundSpectrum {
  PhysicalParams params;
  SpatialGrid grid;
  std::vector<double> energies;   // ascending, J
  Eigen::MatrixXd eigenfunctions;  // grid.size() x n_bound, units 1/sqrt(m)

  std::size_t n_bound() const { return energies.size(); }
  /// E_{i+1} - E_i for zero-based i.
  double level_spacing(std::size_t i = 0) const { return energies.at(i + 1) - energies.at(i); }
  Eigen::VectorXd energy_vector(std::size_t n_eff) const;
};

/// Second-order finite differences with hard walls at the grid edges;
/// symmetric tridiagonal diagonalization restricted to E < 0.
/// Throws ParameterError if the grid does not cover the site window.
BoundSpectrum solve_bound_spectrum(const PhysicalParams& params, const SpatialGrid& grid);

struct ConvergenceReport {
  std::size_t compared_levels = 0;
  double max_relative_drift = 0.0;  // max_i |E_i(h) - E_i(h/2)| / (E_i + U0)
};

/// Compares every eigenvalue with the 2x-refined grid.
ConvergenceReport refinement_drift(const BoundSpectrum& spectrum);

/// solve_bound_spectrum followed by the refinement check; throws
/// VerificationError if any eigenvalue moves by more than `tolerance`.
BoundSpectrum solve_bound_spectrum_checked(const PhysicalParams& params, const SpatialGrid& grid,
                                           double tolerance = 1e-3);

/// Trapezoidal rule on a uniform grid.
double trapezoid(std::span<const double> values, double spacing);

}  // namespace conveyor
