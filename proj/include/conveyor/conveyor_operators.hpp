#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "conveyor/lattice_spectrum.hpp"

namespace conveyor {

using Complex = std::complex<double>;

/// T_b(i,j) = \int psi_i psi_j exp(-i m dv z / hbar) dz in the truncated basis.
///
/// The frame (not the atom) receives the boost, hence the negative exponent.
/// The result is a compression of a unitary and is therefore a contraction.
Eigen::MatrixXcd boost_operator_exact(const BoundSpectrum& spectrum, std::size_t n_eff,
                                      double delta_v);

/// Diagonal of exp(-i H dt / hbar) in the eigenbasis.
Eigen::VectorXcd free_propagator(const BoundSpectrum& spectrum, std::size_t n_eff, double dt);

/// Displacement of the potential minimum of the accelerated site:
/// dz(a) = -asin(m a / (k U0)) / (2k). Throws MaxAccelerationExceeded.
double trap_minimum_shift(const PhysicalParams& params, double acceleration);

/// Overlap <psi_i(z - dz) | psi_j(z)> between displaced and stationary bases.
Eigen::MatrixXd frame_transform_for_shift(const BoundSpectrum& spectrum, std::size_t n_eff,
                                          double shift);

/// frame_transform_for_shift at dz = trap_minimum_shift(a).
Eigen::MatrixXd frame_transform_exact(const BoundSpectrum& spectrum, std::size_t n_eff,
                                      double acceleration);

/// Per-state dephasing rates gamma_i (rad/s), normalized so the state with the
/// largest anharmonic deviation gets 2 gamma0. The ground-state deviation is
/// measured from the bottom of the well.
Eigen::VectorXd dephasing_rates(const BoundSpectrum& spectrum, std::size_t n_eff, double gamma0);

/// M(i,j) = exp(-(gamma_i + gamma_j) dt / 2) off the diagonal, 1 on it.
Eigen::MatrixXd dephasing_matrix(const Eigen::VectorXd& rates, double dt);

struct DephasingModel {
  double gamma0 = 0.0;
  Eigen::VectorXd rates;

  static DephasingModel build(const BoundSpectrum& spectrum, std::size_t n_eff, double gamma0) {
    return {gamma0, dephasing_rates(spectrum, n_eff, gamma0)};
  }
  Eigen::MatrixXd matrix(double dt) const { return dephasing_matrix(rates, dt); }
};

enum class OperatorKind : std::uint8_t { boost, frame };

struct TableAccuracy {
  double worst_error = 0.0;   // max-abs element error over the probes
  double worst_probe = 0.0;   // lookup value where it occurred
  std::size_t n_probes = 0;
};

/// Operator matrices tabulated on a symmetric lookup range and linearly
/// interpolated element by element.
///
/// Boost tables are keyed and sampled uniformly in dv. Frame tables are keyed
/// by acceleration but sampled uniformly in the tilt phase asin(a / a_max),
/// which keeps the nodes dense where dz(a) is steep.
template <class Scalar>
class OperatorTable {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  OperatorTable(OperatorKind kind, std::size_t n_eff, double max_lookup, double scale,
                std::vector<double> nodes, std::vector<Scalar> data);

  OperatorKind kind() const { return kind_; }
  std::size_t n_eff() const { return n_eff_; }
  std::size_t n_samples() const { return nodes_.size(); }
  /// Largest |dv| (boost) or |a| (frame) the table accepts.
  double max_lookup() const { return max_lookup_; }
  bool covers(double x) const { return std::abs(x) <= max_lookup_; }

  /// Lookup values of the stored samples, strictly increasing.
  std::vector<double> sample_points() const;
  Matrix sample(std::size_t index) const;

  /// Interpolated operator; throws RangeError outside [-max, max].
  Matrix at(double x) const;
  void at(double x, Matrix& out) const;

  const TableAccuracy& accuracy() const { return accuracy_; }
  void set_accuracy(TableAccuracy accuracy) { accuracy_ = accuracy; }

  /// Raw storage, for the on-disk cache.
  double scale() const { return scale_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<Scalar>& data() const { return data_; }

 private:
  double to_node_coordinate(double x) const;
  double from_node_coordinate(double u) const;

  OperatorKind kind_;
  std::size_t n_eff_;
  double max_lookup_;
  double scale_;  // a_max for frame tables, unused for boosts
  std::vector<double> nodes_;
  std::vector<Scalar> data_;  // n_samples blocks of n_eff*n_eff, column-major
  TableAccuracy accuracy_;
};

using BoostTable = OperatorTable<Complex>;
using FrameTable = OperatorTable<double>;

extern template class OperatorTable<Complex>;
extern template class OperatorTable<double>;

struct TableOptions {
  std::size_t n_samples = 60;
  double tolerance = 1e-6;
  std::size_t n_probes = 10;
  std::uint64_t probe_seed = 20211;
};

/// Tabulates T_b on [-max_dv, max_dv] and checks `n_probes` random lookups
/// against boost_operator_exact. Throws VerificationError (carrying the worst
/// error) if any probe misses the tolerance.
BoostTable build_boost_table(const BoundSpectrum& spectrum, std::size_t n_eff, double max_dv,
                             const TableOptions& options = {});

/// Same for T_x on [-max_a, max_a]; max_a must not exceed a_max.
FrameTable build_frame_table(const BoundSpectrum& spectrum, std::size_t n_eff, double max_a,
                             const TableOptions& options = {});

/// Doubles n_samples, starting from options.n_samples, until the probe check
/// passes. Gives up with VerificationError past `max_samples`.
BoostTable build_boost_table_refined(const BoundSpectrum& spectrum, std::size_t n_eff,
                                     double max_dv, TableOptions options = {},
                                     std::size_t max_samples = 1 << 16);
FrameTable build_frame_table_refined(const BoundSpectrum& spectrum, std::size_t n_eff,
                                     double max_a, TableOptions options = {},
                                     std::size_t max_samples = 1 << 16);

/// Max-abs element error of the table against exact evaluation at the given
/// lookup values.
double table_error(const BoostTable& table, const BoundSpectrum& spectrum,
                   const std::vector<double>& probes);
double table_error(const FrameTable& table, const BoundSpectrum& spectrum,
                   const std::vector<double>& probes);

struct OperatorTables {
  BoostTable boost;
  FrameTable frame;
};

/// Versioned binary cache of operator tables. Entries are keyed by a hash of
/// the physical parameters, grid, n_eff, range and sample count; a parameter
/// change produces a different key, and files written by another format
/// version are ignored.
class TableCache {
 public:
  static constexpr std::uint32_t format_version = 1;

  explicit TableCache(std::filesystem::path directory);

  std::string key(const BoundSpectrum& spectrum, std::size_t n_eff, OperatorKind kind,
                  double max_lookup, double tolerance) const;

  std::optional<BoostTable> load_boost(const std::string& key) const;
  std::optional<FrameTable> load_frame(const std::string& key) const;
  void store(const std::string& key, const BoostTable& table) const;
  void store(const std::string& key, const FrameTable& table) const;

  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::filesystem::path directory_;
};

}  // namespace conveyor
