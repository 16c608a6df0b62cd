#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <vector>

#include "conveyor/motion_profiles.hpp"
#include "conveyor/physical_params.hpp"

namespace conveyor {

/// Wavefunction propagation on a periodic grid spanning several lattice
/// sites, used to cross-check the density-matrix engine without basis
/// truncation or dephasing. Only the single-site potential is shared with the
/// engine; the oracle has its own eigensolver (dense Fourier-grid Hamiltonian)
/// and a split-step Fourier propagator.
struct OracleOptions {
  double window_sites = 6.0;        // total width in lattice sites (>= 4)
  std::size_t n_points = 2048;      // FFT length
  double max_substep = 5e-9;        // s, split-step interval upper bound
  double absorber_sites = 1.0;      // quadratic-ramp absorber width at each edge, in sites
  double retention_half_width = 0;  // 0: 1.5 x site half-width
  double basis_half_width = 0;      // 0: whole window
};

struct OracleInitial {
  enum class Kind { eigenstate, thermal } kind = Kind::eigenstate;
  std::size_t index = 0;       // zero-based eigenstate for Kind::eigenstate
  double temperature = 0.0;    // K, thermal only
  std::size_t n_states = 0;    // thermal: states in the ensemble (0 = all bound)

  static OracleInitial eigenstate(std::size_t i) { return {Kind::eigenstate, i, 0.0, 0}; }
  static OracleInitial thermal(double t, std::size_t n_states) {
    return {Kind::thermal, 0, t, n_states};
  }
};

struct OracleResult {
  double retention = 0.0;         // norm inside the retention window
  double bound_population = 0.0;  // sum of |<psi_i|psi>|^2 over bound states
  double absorbed = 0.0;          // norm removed by the edge absorber
  Eigen::VectorXd populations;    // |<psi_i|psi>|^2, ascending energy
};

class GridOracle {
 public:
  explicit GridOracle(const PhysicalParams& params, OracleOptions options = {});

  const PhysicalParams& params() const { return params_; }
  std::size_t n_bound() const { return energies_.size(); }
  const std::vector<double>& energies() const { return energies_; }
  double spacing() const { return spacing_; }
  std::vector<double> positions() const;
  /// Bound eigenfunction i on the full grid (zero outside the basis window).
  Eigen::VectorXcd eigenstate(std::size_t i) const;

  /// Largest momentum (kg m/s) the grid represents without aliasing.
  double max_momentum() const;
  /// Throws VerificationError unless the grid resolves the well momentum plus
  /// the largest single kick plus a thermal spread at `temperature`. The
  /// propagation runs in the lattice frame, so trapped states never see the
  /// conveyor velocity itself.
  void check_resolution(const BoostSchedule& schedule, double temperature) const;

  /// Evolves one wavefunction through the schedule (phase kick, then split-step
  /// free evolution for dt).
  OracleResult propagate(const Eigen::VectorXcd& psi, const BoostSchedule& schedule) const;

  /// Pure eigenstates or Boltzmann-weighted incoherent mixtures of them.
  OracleResult propagate(const OracleInitial& initial, const BoostSchedule& schedule) const;

  /// Norm-only free evolution without absorber (diagnostics).
  Eigen::VectorXcd evolve_free(Eigen::VectorXcd psi, std::size_t n_substeps, double substep,
                               bool absorb) const;

 private:
  Eigen::VectorXd overlaps(const Eigen::VectorXcd& psi) const;
  double window_norm(const Eigen::VectorXcd& psi) const;

  PhysicalParams params_;
  OracleOptions options_;
  double spacing_;
  std::vector<double> z_;
  std::vector<double> potential_;
  std::vector<double> mask_;
  std::vector<double> wavenumber_sq_;
  std::vector<double> energies_;
  Eigen::MatrixXd basis_;  // n_points x n_bound, discrete-normalized (sum |.|^2 h = 1)
};

/// Convenience wrapper with default options.
OracleResult propagate_grid(const OracleInitial& initial, const BoostSchedule& schedule,
                            const PhysicalParams& params, const OracleOptions& options = {});

}  // namespace conveyor
