#pragma once

#include <cstddef>
#include <numbers>
#include <vector>

namespace conveyor {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double boltzmann = 1.380649e-23;       // J / K
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double rb87_mass = 86.909180527 * atomic_mass_unit;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

/// Lattice laser, atom and effective single-site depth. Every derived
/// quantity is computed on demand from these three numbers.
class PhysicalParams {
 public:
  /// Throws ParameterError unless all three values are finite and positive.
  PhysicalParams(double wavelength, double atomic_mass, double trap_depth);

  /// 1064 nm lattice, 87Rb, depth given in microkelvin.
  static PhysicalParams rb87_1064nm(double trap_depth_uK);

  double wavelength() const { return wavelength_; }
  double atomic_mass() const { return mass_; }
  double trap_depth() const { return depth_; }

  double wavenumber() const { return constants::two_pi / wavelength_; }
  /// omega_0 = k sqrt(2 U0 / m)
  double harmonic_angular_frequency() const;
  double trap_frequency() const { return harmonic_angular_frequency() / constants::two_pi; }
  /// a_max = U0 k / m
  double max_acceleration() const { return depth_ * wavenumber() / mass_; }
  /// Half-width pi/(2k) of the single-site window.
  double site_half_width() const { return wavelength_ / 4.0; }

  bool operator==(const PhysicalParams&) const = default;

 private:
  double wavelength_;
  double mass_;
  double depth_;
};

struct TrapConstants {
  double angular_frequency;  // rad/s
  double frequency;          // Hz
  double max_acceleration;   // m/s^2
};

TrapConstants trap_constants(const PhysicalParams& params);

/// Uniform, symmetric sampling of [-half_width, half_width]. The odd point
/// count puts a sample at z = 0; the two end samples are the hard walls.
class SpatialGrid {
 public:
  SpatialGrid(double half_width, std::size_t n_points);

  /// Grid covering width_factor times the single-site window.
  static SpatialGrid for_site(const PhysicalParams& params, std::size_t n_points = 2001,
                              double width_factor = 1.5);

  double half_width() const { return half_width_; }
  std::size_t size() const { return n_points_; }
  double spacing() const { return 2.0 * half_width_ / static_cast<double>(n_points_ - 1); }
  double position(std::size_t j) const {
    return -half_width_ + static_cast<double>(j) * spacing();
  }
  std::vector<double> positions() const;

  /// Same extent, spacing divided by `factor`.
  SpatialGrid refined(std::size_t factor = 2) const;

  bool operator==(const SpatialGrid&) const = default;

 private:
  double half_width_;
  std::size_t n_points_;
};

}  // namespace conveyor
