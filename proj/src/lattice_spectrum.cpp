#include "conveyor/lattice_spectrum.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

#include "conveyor/errors.hpp"

namespace conveyor {

double site_potential(const PhysicalParams& params, double z) {
  if (std::abs(z) > params.site_half_width()) return 0.0;
  const double c = std::cos(params.wavenumber() * z);
  return -params.trap_depth() * c * c;
}

std::vector<double> build_potential(const PhysicalParams& params, const SpatialGrid& grid) {
  std::vector<double> u(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) u[j] = site_potential(params, grid.position(j));
  return u;
}

Eigen::VectorXd BoundSpectrum::energy_vector(std::size_t n_eff) const {
  if (n_eff > n_bound()) throw ParameterError("n_eff exceeds the number of bound states");
  return Eigen::Map<const Eigen::VectorXd>(energies.data(), static_cast<Eigen::Index>(n_eff));
}

double trapezoid(std::span<const double> values, double spacing) {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t j = 1; j + 1 < values.size(); ++j) sum += values[j];
  return sum * spacing;
}

BoundSpectrum solve_bound_spectrum(const PhysicalParams& params, const SpatialGrid& grid) {
  if (grid.half_width() < params.site_half_width() * (1.0 - 1e-12)) {
    throw ParameterError("grid does not cover the single-site window");
  }
  const double h = grid.spacing();
  const double depth = params.trap_depth();
  const double hop = constants::hbar * constants::hbar /
                     (2.0 * params.atomic_mass() * h * h) / depth;

  // Unknowns are the interior samples; the two edge samples are the walls.
  const lapack_int n = static_cast<lapack_int>(grid.size()) - 2;
  std::vector<double> diag(n), off(n, -hop);
  for (lapack_int j = 0; j < n; ++j) {
    diag[j] = 2.0 * hop + site_potential(params, grid.position(j + 1)) / depth;
  }

  lapack_int found = 0;
  std::vector<double> w(n);
  // Bound states number far fewer than n; size the eigenvector block by an
  // upper estimate and grow on the (unexpected) overflow.
  std::vector<double> z(static_cast<std::size_t>(n) * n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'V', n, diag.data(), off.data(), -2.0, 0.0, 0, 0,
                     0.0, &found, w.data(), z.data(), n, support.data());
  if (info != 0) {
    throw VerificationError("tridiagonal eigensolver failed (info=" + std::to_string(info) + ")",
                            static_cast<double>(info));
  }

  std::vector<lapack_int> keep;
  for (lapack_int i = 0; i < found; ++i) {
    if (w[i] < 0.0) keep.push_back(i);
  }
  if (keep.empty()) throw VerificationError("potential supports no bound state", 0.0);

  BoundSpectrum spectrum{params, grid, {}, Eigen::MatrixXd::Zero(grid.size(), keep.size())};
  const double norm = 1.0 / std::sqrt(h);
  const std::size_t centre = grid.size() / 2;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const lapack_int i = keep[c];
    spectrum.energies.push_back(w[i] * depth);
    auto column = spectrum.eigenfunctions.col(static_cast<Eigen::Index>(c));
    for (lapack_int j = 0; j < n; ++j) {
      column(j + 1) = z[static_cast<std::size_t>(i) * n + j] * norm;
    }
    Eigen::Index peak = 0;
    column.tail(grid.size() - centre).cwiseAbs().maxCoeff(&peak);
    if (column(static_cast<Eigen::Index>(centre) + peak) < 0.0) column = -column;
  }
  return spectrum;
}

ConvergenceReport refinement_drift(const BoundSpectrum& spectrum) {
  const BoundSpectrum fine = solve_bound_spectrum(spectrum.params, spectrum.grid.refined(2));
  ConvergenceReport report;
  report.compared_levels = std::min(spectrum.n_bound(), fine.n_bound());
  const double depth = spectrum.params.trap_depth();
  for (std::size_t i = 0; i < report.compared_levels; ++i) {
    const double drift =
        std::abs(spectrum.energies[i] - fine.energies[i]) / (fine.energies[i] + depth);
    report.max_relative_drift = std::max(report.max_relative_drift, drift);
  }
  return report;
}

BoundSpectrum solve_bound_spectrum_checked(const PhysicalParams& params, const SpatialGrid& grid,
                                           double tolerance) {
  BoundSpectrum spectrum = solve_bound_spectrum(params, grid);
  const ConvergenceReport report = refinement_drift(spectrum);
  if (report.max_relative_drift > tolerance) {
    throw VerificationError("grid too coarse: eigenvalues drift by " +
                                std::to_string(report.max_relative_drift) +
                                " under 2x refinement",
                            report.max_relative_drift);
  }
  return spectrum;
}

}  // namespace conveyor
