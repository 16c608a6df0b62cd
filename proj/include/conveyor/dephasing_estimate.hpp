#pragma once

#include "conveyor/physical_params.hpp"

namespace conveyor {

struct TransverseParams {
  double angular_frequency = constants::two_pi * 1.6e3;  // omega_r, rad/s
  double temperature = 40e-6;                            // K
};

/// Trap depth and harmonic frequency at U0 -/+ k_B T / 2.
struct DepthExcursion {
  double depth_min;  // J
  double depth_max;  // J
  double omega_min;  // rad/s
  double omega_max;  // rad/s
  double delta_omega;  // omega_max - omega_min
};

/// Throws ParameterError unless 0 <= T and k_B T / 2 < U0.
DepthExcursion depth_excursion(const PhysicalParams& params, double temperature);

enum class AmplitudeConvention {
  full,  // delta_omega_0 = omega_max - omega_min
  half,  // delta_omega_0 = (omega_max - omega_min) / 2
};

struct Gamma0Estimate {
  DepthExcursion excursion;
  double delta_omega0;    // modulation amplitude actually used, rad/s
  double tau;             // s
  double gamma0;          // 1 / tau
  double residual;        // |integral - pi| / pi
  bool diverged = false;  // tau beyond 1000 transverse periods
};

/// Smallest tau with  integral_0^tau |dw0 sin(2 w_r t)| dt = pi, and
/// gamma0 = 1 / tau. The integral is piecewise analytic: each half-arch of
/// |sin| contributes dw0 / w_r.
Gamma0Estimate estimate_gamma0(const PhysicalParams& params, const TransverseParams& transverse,
                               AmplitudeConvention convention = AmplitudeConvention::full);

/// integral_0^tau |amplitude sin(2 omega_r t)| dt
double phase_integral(double amplitude, double omega_r, double tau);

}  // namespace conveyor
