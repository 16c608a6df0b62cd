#include "conveyor/density_evolution.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <iomanip>
#include <limits>

#include "conveyor/errors.hpp"

namespace conveyor {

MotionalDensityMatrix::MotionalDensityMatrix(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols() || rho_.rows() == 0) {
    throw ParameterError("density matrix must be square and non-empty");
  }
}

double MotionalDensityMatrix::hermiticity_error() const {
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double MotionalDensityMatrix::min_eigenvalue() const {
  const Eigen::MatrixXcd sym = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

MotionalDensityMatrix thermal_state(const BoundSpectrum& spectrum, std::size_t n_eff,
                                    double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  const Eigen::VectorXd e = spectrum.energy_vector(n_eff);
  const Eigen::VectorXd weights =
      (-(e.array() - e(0)) / (constants::boltzmann * temperature)).exp();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(e.size(), e.size());
  rho.diagonal() = (weights / weights.sum()).cast<Complex>();
  return MotionalDensityMatrix(std::move(rho));
}

MotionalDensityMatrix ground_state(std::size_t n_eff) {
  if (n_eff < 1) throw ParameterError("n_eff must be positive");
  const auto n = static_cast<Eigen::Index>(n_eff);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  rho(0, 0) = 1.0;
  return MotionalDensityMatrix(std::move(rho));
}

// ---------------------------------------------------------------------------

StepKernel::StepKernel(const BoundSpectrum& spectrum, std::size_t n_eff, double dt,
                       const DephasingModel& dephasing, const OperatorTables& tables)
    : tables_(tables),
      dt_(dt),
      max_acceleration_(spectrum.params.max_acceleration()),
      free_phases_(free_propagator(spectrum, n_eff, dt)),
      dephasing_(dephasing_matrix(dephasing.rates, dt)),
      dephasing_active_(dephasing.rates.size() > 0 && dephasing.rates.maxCoeff() > 0.0) {
  if (!(dt > 0.0)) throw ParameterError("time step must be positive");
  if (tables.boost.n_eff() != n_eff || tables.frame.n_eff() != n_eff) {
    throw ParameterError("operator tables were built for a different n_eff");
  }
  if (static_cast<std::size_t>(dephasing.rates.size()) != n_eff) {
    throw ParameterError("dephasing model was built for a different n_eff");
  }
}

void StepKernel::apply(Eigen::MatrixXcd& rho, double dv) {
  const double a = dv / dt_;
  if (std::abs(a) > max_acceleration_) throw MaxAccelerationExceeded(a, max_acceleration_);

  if (dv == 0.0) {
    forward_ = free_phases_.asDiagonal();
  } else {
    tables_.boost.at(dv, boost_);
    forward_ = free_phases_.asDiagonal() * boost_;
  }

  const bool framed = a != 0.0;
  if (framed) {
    tables_.frame.at(a, frame_);
    frame_c_ = frame_.cast<Complex>();
    scratch_.noalias() = frame_c_ * forward_;
    forward_.swap(scratch_);
  }

  scratch_.noalias() = forward_ * rho;
  rho.noalias() = scratch_ * forward_.adjoint();

  if (dephasing_active_) rho.array() *= dephasing_.array().cast<Complex>();

  if (framed) {
    scratch_.noalias() = frame_c_.transpose() * rho;
    rho.noalias() = scratch_ * frame_c_;
  }
  scratch_ = 0.5 * (rho + rho.adjoint());
  rho.swap(scratch_);
}

void step(MotionalDensityMatrix& rho, double dv, double dt, const BoundSpectrum& spectrum,
          const OperatorTables& tables, const DephasingModel& dephasing) {
  StepKernel kernel(spectrum, rho.dimension(), dt, dephasing, tables);
  kernel.apply(rho.matrix(), dv);
}

// ---------------------------------------------------------------------------

double boltzmann_mean_energy(const BoundSpectrum& spectrum, std::size_t n_eff,
                             double temperature) {
  const Eigen::ArrayXd gap = spectrum.energy_vector(n_eff).array() - spectrum.energies[0];
  if (temperature == std::numeric_limits<double>::infinity()) return gap.mean();
  const Eigen::ArrayXd w = (-gap / (constants::boltzmann * temperature)).exp();
  return (w * gap).sum() / w.sum();
}

TemperatureEstimate effective_temperature(const MotionalDensityMatrix& rho,
                                          const BoundSpectrum& spectrum) {
  const double trace = rho.trace();
  if (!(trace > 1e-6)) throw ParameterError("effective temperature needs trace(rho) > 1e-6");
  const std::size_t n_eff = rho.dimension();
  const Eigen::ArrayXd gap = spectrum.energy_vector(n_eff).array() - spectrum.energies[0];
  const double energy = (rho.populations().array() * gap).sum() / trace;

  constexpr double t_low = 1e-9;
  constexpr double t_high = 1e-1;
  if (energy <= boltzmann_mean_energy(spectrum, n_eff, t_low)) return {t_low, false};
  if (energy >= boltzmann_mean_energy(spectrum, n_eff, t_high)) return {t_high, true};

  // Bisection in log T; the Boltzmann mean is increasing in T.
  double lo = std::log(t_low);
  double hi = std::log(t_high);
  while (std::exp(hi) - std::exp(lo) > 1e-7 * std::exp(lo)) {
    const double mid = 0.5 * (lo + hi);
    if (boltzmann_mean_energy(spectrum, n_eff, std::exp(mid)) < energy) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {std::exp(0.5 * (lo + hi)), false};
}

// ---------------------------------------------------------------------------

namespace {

void require_config(const SimulationConfig& config, const BoundSpectrum& spectrum) {
  if (config.n_eff < 2 || config.n_eff > spectrum.n_bound()) {
    throw ParameterError("n_eff must lie in [2, " + std::to_string(spectrum.n_bound()) + "]");
  }
  if (!(config.gamma0 >= 0.0)) throw ParameterError("gamma0 must be non-negative");
  if (config.initial.kind == InitialCondition::Kind::thermal &&
      !(config.initial.temperature > 0.0)) {
    throw ParameterError("thermal initial state needs T > 0");
  }
}

void summarize(EvolutionResult& result, const BoundSpectrum& spectrum) {
  const MotionalDensityMatrix rho(result.rho_final);
  result.populations = rho.populations();
  result.retention = rho.trace();
  result.ground_population = result.populations(0);
  if (result.retention > 1e-6) {
    const Eigen::ArrayXd gap =
        spectrum.energy_vector(rho.dimension()).array() - spectrum.energies[0];
    result.mean_energy = (result.populations.array() * gap).sum() / result.retention;
    result.ground_population_conditional = result.ground_population / result.retention;
    result.temperature = effective_temperature(rho, spectrum);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.mean_energy = nan;
    result.ground_population_conditional = nan;
    result.temperature = {nan, false};
  }
}

}  // namespace

EvolutionResult evolve(const SimulationConfig& config, const BoundSpectrum& spectrum,
                       const BoostSchedule& schedule, const OperatorTables& tables) {
  require_config(config, spectrum);
  const std::size_t n_eff = config.n_eff;
  MotionalDensityMatrix initial =
      config.initial.kind == InitialCondition::Kind::ground
          ? ground_state(n_eff)
          : thermal_state(spectrum, n_eff, config.initial.temperature);

  EvolutionResult result;
  result.rho_final = initial.matrix();
  if (schedule.boosts.empty()) {
    summarize(result, spectrum);
    return result;
  }

  const DephasingModel dephasing = DephasingModel::build(spectrum, n_eff, config.gamma0);
  StepKernel kernel(spectrum, n_eff, schedule.dt, dephasing, tables);
  Eigen::MatrixXcd& rho = result.rho_final;
  if (config.record_trajectory) result.trajectory.reserve(schedule.size());

  double velocity = 0.0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    velocity += schedule.boosts[i];
    if (!result.exceeded_at_step) {
      try {
        kernel.apply(rho, schedule.boosts[i]);
      } catch (const MaxAccelerationExceeded&) {
        result.exceeded_at_step = i;
        rho.setZero();
      }
    }
    if (config.record_trajectory) {
      result.trajectory.push_back({i + 1, static_cast<double>(i + 1) * schedule.dt, velocity,
                                   rho.diagonal().real().sum(), rho(0, 0).real()});
    } else if (result.exceeded_at_step) {
      break;
    }
  }
  summarize(result, spectrum);
  return result;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory) {
  out << "step,time_s,velocity_m_s,retention,ground_population\n";
  out << std::setprecision(12);
  for (const auto& p : trajectory) {
    out << p.step << ',' << p.time << ',' << p.velocity << ',' << p.retention << ','
        << p.ground_population << '\n';
  }
}

}  // namespace conveyor
