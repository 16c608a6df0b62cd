#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "conveyor/conveyor_operators.hpp"
#include "conveyor/lattice_spectrum.hpp"
#include "conveyor/motion_profiles.hpp"

namespace conveyor {

/// Motional state in the stationary eigenbasis. The trace is the retention:
/// population boosted out of the included states is lost.
class MotionalDensityMatrix {
 public:
  explicit MotionalDensityMatrix(Eigen::MatrixXcd rho);

  const Eigen::MatrixXcd& matrix() const { return rho_; }
  Eigen::MatrixXcd& matrix() { return rho_; }
  std::size_t dimension() const { return static_cast<std::size_t>(rho_.rows()); }

  double trace() const { return rho_.diagonal().real().sum(); }
  Eigen::VectorXd populations() const { return rho_.diagonal().real(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;

 private:
  Eigen::MatrixXcd rho_;
};

/// Boltzmann populations p_i ~ exp(-(E_i - E_1) / k_B T) over the n_eff
/// included states, normalized to trace 1.
MotionalDensityMatrix thermal_state(const BoundSpectrum& spectrum, std::size_t n_eff,
                                    double temperature);
MotionalDensityMatrix ground_state(std::size_t n_eff);

struct InitialCondition {
  enum class Kind { thermal, ground } kind = Kind::thermal;
  double temperature = 40e-6;  // K, thermal only

  static InitialCondition thermal(double t) { return {Kind::thermal, t}; }
  static InitialCondition ground() { return {Kind::ground, 0.0}; }
};

struct SimulationConfig {
  std::size_t n_eff = 28;
  double gamma0 = 0.0;  // rad/s
  InitialCondition initial;
  bool record_trajectory = false;
};

struct TrajectoryPoint {
  std::size_t step;
  double time;
  double velocity;
  double retention;
  double ground_population;
};

struct TemperatureEstimate {
  double kelvin = 0.0;
  bool saturated = false;  // mean energy at or beyond the T -> infinity limit
};

struct EvolutionResult {
  Eigen::MatrixXcd rho_final;
  double retention = 1.0;
  Eigen::VectorXd populations;  // absolute
  double mean_energy = 0.0;     // J above E_1, conditioned on retention
  TemperatureEstimate temperature;
  double ground_population = 1.0;  // absolute
  double ground_population_conditional = 1.0;
  /// Set when a boost demanded |a| > a_max; retention is 0 from that step on.
  std::optional<std::size_t> exceeded_at_step;
  std::vector<TrajectoryPoint> trajectory;
};

/// Precomputed per-dt pieces of one evolution step plus scratch storage.
///
/// One step applies, with a = dv / dt,
///   rho <- T_x(a)^T [ (T_x(a) T_f T_b(dv) rho T_b^+ T_f^+ T_x(a)^T) o M_d ] T_x(a)
/// where o is the element-wise product.
class StepKernel {
 public:
  StepKernel(const BoundSpectrum& spectrum, std::size_t n_eff, double dt,
             const DephasingModel& dephasing, const OperatorTables& tables);

  /// Throws MaxAccelerationExceeded if |dv / dt| > a_max and RangeError if a
  /// table does not cover the lookup.
  void apply(Eigen::MatrixXcd& rho, double dv);

  double dt() const { return dt_; }

 private:
  const OperatorTables& tables_;
  double dt_;
  double max_acceleration_;
  Eigen::VectorXcd free_phases_;
  Eigen::MatrixXd dephasing_;
  bool dephasing_active_;
  Eigen::MatrixXcd boost_;
  Eigen::MatrixXd frame_;
  Eigen::MatrixXcd frame_c_;
  Eigen::MatrixXcd forward_;
  Eigen::MatrixXcd scratch_;
};

/// One step on a standalone density matrix; see StepKernel.
void step(MotionalDensityMatrix& rho, double dv, double dt, const BoundSpectrum& spectrum,
          const OperatorTables& tables, const DephasingModel& dephasing);

/// Runs the whole schedule. Deterministic; never throws for an over-limit
/// boost (see EvolutionResult::exceeded_at_step).
EvolutionResult evolve(const SimulationConfig& config, const BoundSpectrum& spectrum,
                       const BoostSchedule& schedule, const OperatorTables& tables);

/// Temperature whose Boltzmann mean energy over the n_eff included states
/// matches the energy of rho / trace(rho), found by bisection on
/// [1 nK, 100 mK]. Throws ParameterError if trace(rho) <= 1e-6.
TemperatureEstimate effective_temperature(const MotionalDensityMatrix& rho,
                                          const BoundSpectrum& spectrum);

/// Mean Boltzmann energy above E_1 over the first n_eff levels.
double boltzmann_mean_energy(const BoundSpectrum& spectrum, std::size_t n_eff,
                             double temperature);

/// Per-step CSV: step,time_s,velocity_m_s,retention,ground_population.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory);

}  // namespace conveyor
