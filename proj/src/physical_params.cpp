#include "conveyor/physical_params.hpp"

#include <cmath>

#include "conveyor/errors.hpp"

namespace conveyor {

namespace {

void require_positive(double value, const char* name) {
  if (!(std::isfinite(value) && value > 0.0)) {
    throw ParameterError(std::string(name) + " must be finite and strictly positive");
  }
}

}  // namespace

PhysicalParams::PhysicalParams(double wavelength, double atomic_mass, double trap_depth)
    : wavelength_(wavelength), mass_(atomic_mass), depth_(trap_depth) {
  require_positive(wavelength, "wavelength");
  require_positive(atomic_mass, "atomic_mass");
  require_positive(trap_depth, "trap_depth");
}

PhysicalParams PhysicalParams::rb87_1064nm(double trap_depth_uK) {
  return PhysicalParams(1064e-9, constants::rb87_mass,
                        trap_depth_uK * 1e-6 * constants::boltzmann);
}

double PhysicalParams::harmonic_angular_frequency() const {
  return wavenumber() * std::sqrt(2.0 * depth_ / mass_);
}

TrapConstants trap_constants(const PhysicalParams& params) {
  return {params.harmonic_angular_frequency(), params.trap_frequency(),
          params.max_acceleration()};
}

SpatialGrid::SpatialGrid(double half_width, std::size_t n_points)
    : half_width_(half_width), n_points_(n_points) {
  if (!(std::isfinite(half_width) && half_width > 0.0)) {
    throw ParameterError("grid half-width must be positive");
  }
  if (n_points < 5 || n_points % 2 == 0) {
    throw ParameterError("grid point count must be odd and at least 5");
  }
}

SpatialGrid SpatialGrid::for_site(const PhysicalParams& params, std::size_t n_points,
                                  double width_factor) {
  if (width_factor < 1.0) {
    throw ParameterError("grid must cover the whole site window (width_factor >= 1)");
  }
  return SpatialGrid(width_factor * params.site_half_width(), n_points);
}

std::vector<double> SpatialGrid::positions() const {
  std::vector<double> z(n_points_);
  for (std::size_t j = 0; j < n_points_; ++j) z[j] = position(j);
  return z;
}

SpatialGrid SpatialGrid::refined(std::size_t factor) const {
  if (factor < 1) throw ParameterError("refinement factor must be >= 1");
  return SpatialGrid(half_width_, (n_points_ - 1) * factor + 1);
}

}  // namespace conveyor
