#include "conveyor/dephasing_estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "conveyor/errors.hpp"

namespace conveyor {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double max_periods = 1e3;

}  // namespace

DepthExcursion depth_excursion(const PhysicalParams& params, double temperature) {
  if (!(temperature >= 0.0)) throw ParameterError("temperature must be non-negative");
  const double half = 0.5 * constants::boltzmann * temperature;
  const double u0 = params.trap_depth();
  if (!(half < u0)) throw ParameterError("k_B T / 2 must be below the trap depth");

  DepthExcursion e{};
  e.depth_min = u0 - half;
  e.depth_max = u0 + half;
  const double k = params.wavenumber();
  const double m = params.atomic_mass();
  e.omega_min = k * std::sqrt(2.0 * e.depth_min / m);
  e.omega_max = k * std::sqrt(2.0 * e.depth_max / m);
  e.delta_omega = e.omega_max - e.omega_min;
  return e;
}

double phase_integral(double amplitude, double omega_r, double tau) {
  const double theta = 2.0 * omega_r * tau;
  const double arches = std::floor(theta / pi);
  const double rest = theta - arches * pi;
  return std::abs(amplitude) / (2.0 * omega_r) * (2.0 * arches + 1.0 - std::cos(rest));
}

Gamma0Estimate estimate_gamma0(const PhysicalParams& params, const TransverseParams& transverse,
                               AmplitudeConvention convention) {
  const double omega_r = transverse.angular_frequency;
  if (!(omega_r > 0.0 && std::isfinite(omega_r))) {
    throw ParameterError("transverse frequency must be positive");
  }
  Gamma0Estimate out{};
  out.excursion = depth_excursion(params, transverse.temperature);
  out.delta_omega0 = convention == AmplitudeConvention::full ? out.excursion.delta_omega
                                                             : 0.5 * out.excursion.delta_omega;
  if (!(out.delta_omega0 > 0.0)) throw ParameterError("frequency excursion must be positive");

  // In theta = 2 w_r t the condition reads F(theta) = 2 pi w_r / dw0 with
  // F(theta) = 2 floor(theta / pi) + 1 - cos(theta mod pi).
  const double target = 2.0 * pi * omega_r / out.delta_omega0;
  const double arches = std::floor(0.5 * target);
  const double rest = std::acos(std::clamp(1.0 - (target - 2.0 * arches), -1.0, 1.0));
  const double theta = arches * pi + rest;

  out.tau = theta / (2.0 * omega_r);
  out.gamma0 = 1.0 / out.tau;
  out.residual = std::abs(phase_integral(out.delta_omega0, omega_r, out.tau) - pi) / pi;
  out.diverged = out.tau * omega_r / (2.0 * pi) > max_periods;
  return out;
}

}  // namespace conveyor
