#include "conveyor/grid_oracle.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "conveyor/errors.hpp"
#include "conveyor/lattice_spectrum.hpp"
#include "fftw_support.hpp"
#include "parallel.hpp"

namespace conveyor {

namespace {

using Complex = std::complex<double>;

// Rate of the edge absorber at its outer boundary (1/s), cosine ramp inward.
constexpr double absorber_rate = 1e8;

class FftPair {
 public:
  explicit FftPair(std::vector<Complex>& buffer) {
    auto* data = reinterpret_cast<fftw_complex*>(buffer.data());
    const int n = static_cast<int>(buffer.size());
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(n, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;
  ~FftPair() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  void forward() const { fftw_execute(forward_); }
  void backward() const { fftw_execute(backward_); }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace

GridOracle::GridOracle(const PhysicalParams& params, OracleOptions options)
    : params_(params), options_(options) {
  if (options_.window_sites < 4.0) throw ParameterError("oracle window must span >= 4 sites");
  if (options_.n_points < 64 || options_.n_points % 2 != 0) {
    throw ParameterError("oracle grid needs an even point count >= 64");
  }
  if (!(options_.max_substep > 0.0)) throw ParameterError("max_substep must be positive");

  const double site = params.wavelength() / 2.0;
  const double length = options_.window_sites * site;
  const std::size_t n = options_.n_points;
  spacing_ = length / static_cast<double>(n);
  if (options_.retention_half_width <= 0.0) {
    options_.retention_half_width = 1.5 * params.site_half_width();
  }

  z_.resize(n);
  potential_.resize(n);
  mask_.assign(n, 0.0);
  wavenumber_sq_.resize(n);
  const double absorber = options_.absorber_sites * site;
  for (std::size_t j = 0; j < n; ++j) {
    z_[j] = -0.5 * length + static_cast<double>(j) * spacing_;
    potential_[j] = site_potential(params, z_[j]);
    const double depth_into = std::abs(z_[j]) - (0.5 * length - absorber);
    if (depth_into > 0.0) {
      mask_[j] = 0.5 * (1.0 - std::cos(std::numbers::pi * depth_into / absorber));
    }
    const auto k_index =
        static_cast<double>(j < n / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n));
    const double k = constants::two_pi * k_index / length;
    wavenumber_sq_[j] = k * k;
  }

  // Stationary states of the same periodic Hamiltonian the propagator uses:
  // the kinetic term is the circulant matrix of the FFT Laplacian, restricted
  // to the basis window.
  const double basis_half = options_.basis_half_width > 0.0 ? options_.basis_half_width
                                                            : 0.5 * length;
  std::vector<std::size_t> rows;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(z_[j]) <= basis_half) rows.push_back(j);
  }

  const double kinetic_scale = constants::hbar * constants::hbar / (2.0 * params.atomic_mass());
  std::vector<Complex> kernel(n);
  for (std::size_t j = 0; j < n; ++j) kernel[j] = kinetic_scale * wavenumber_sq_[j];
  {
    FftPair fft(kernel);
    fft.backward();
  }
  const double depth = params.trap_depth();
  const auto m = static_cast<lapack_int>(rows.size());
  std::vector<double> h(static_cast<std::size_t>(m) * m);
  for (lapack_int c = 0; c < m; ++c) {
    for (lapack_int r = 0; r < m; ++r) {
      const std::size_t d = (rows[r] + n - rows[c]) % n;
      double value = kernel[d].real() / static_cast<double>(n) / depth;
      if (r == c) value += potential_[rows[r]] / depth;
      h[static_cast<std::size_t>(c) * m + r] = value;
    }
  }

  lapack_int found = 0;
  std::vector<double> w(m);
  std::vector<double> vectors(static_cast<std::size_t>(m) * 64);
  std::vector<lapack_int> support(2 * 64);
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'V', 'U', m, h.data(), m, -2.0, 0.0, 0, 0, 0.0,
                     &found, w.data(), vectors.data(), m, support.data());
  if (info != 0 || found > 64) {
    throw VerificationError("oracle eigensolver failed", static_cast<double>(info));
  }

  const std::size_t centre = n / 2;
  basis_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 0);
  std::vector<double> energies;
  std::vector<Eigen::VectorXd> columns;
  for (lapack_int i = 0; i < found; ++i) {
    if (!(w[i] < 0.0)) continue;
    Eigen::VectorXd col = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (lapack_int r = 0; r < m; ++r) {
      col(static_cast<Eigen::Index>(rows[r])) =
          vectors[static_cast<std::size_t>(i) * m + r] / std::sqrt(spacing_);
    }
    Eigen::Index peak = 0;
    col.tail(static_cast<Eigen::Index>(n - centre)).cwiseAbs().maxCoeff(&peak);
    if (col(static_cast<Eigen::Index>(centre) + peak) < 0.0) col = -col;
    energies.push_back(w[i] * depth);
    columns.push_back(std::move(col));
  }
  energies_ = std::move(energies);
  basis_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) basis_.col(static_cast<Eigen::Index>(c)) = columns[c];
}

std::vector<double> GridOracle::positions() const { return z_; }

Eigen::VectorXcd GridOracle::eigenstate(std::size_t i) const {
  if (i >= n_bound()) throw ParameterError("oracle eigenstate index out of range");
  return basis_.col(static_cast<Eigen::Index>(i)).cast<Complex>();
}

double GridOracle::max_momentum() const {
  return constants::hbar * std::numbers::pi / spacing_;
}

void GridOracle::check_resolution(const BoostSchedule& schedule, double temperature) const {
  const double m = params_.atomic_mass();
  const double well = std::sqrt(2.0 * m * params_.trap_depth());
  const double thermal = 3.0 * std::sqrt(m * constants::boltzmann * std::max(temperature, 0.0));
  const double needed = well + m * schedule.max_abs_boost() + thermal;
  if (needed > max_momentum()) {
    std::ostringstream msg;
    msg << "oracle grid spacing " << spacing_ << " m cannot represent momentum " << needed
        << " kg m/s (limit " << max_momentum() << ")";
    throw VerificationError(msg.str(), needed / max_momentum());
  }
}

Eigen::VectorXd GridOracle::overlaps(const Eigen::VectorXcd& psi) const {
  const Eigen::VectorXcd amp = basis_.transpose().cast<Complex>() * psi * spacing_;
  return amp.cwiseAbs2();
}

double GridOracle::window_norm(const Eigen::VectorXcd& psi) const {
  double norm = 0.0;
  for (std::size_t j = 0; j < z_.size(); ++j) {
    if (std::abs(z_[j]) <= options_.retention_half_width) {
      norm += std::norm(psi(static_cast<Eigen::Index>(j)));
    }
  }
  return norm * spacing_;
}

Eigen::VectorXcd GridOracle::evolve_free(Eigen::VectorXcd psi, std::size_t n_substeps,
                                         double substep, bool absorb) const {
  const std::size_t n = z_.size();
  std::vector<Complex> buffer(psi.data(), psi.data() + n);
  FftPair fft(buffer);
  std::vector<Complex> half_potential(n), kinetic(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double damping = absorb ? std::exp(-0.5 * absorber_rate * mask_[j] * substep) : 1.0;
    half_potential[j] = std::polar(damping, -0.5 * potential_[j] * substep / constants::hbar);
    kinetic[j] = std::polar(1.0 / static_cast<double>(n),
                            -constants::hbar * wavenumber_sq_[j] * substep /
                                (2.0 * params_.atomic_mass()));
  }
  for (std::size_t s = 0; s < n_substeps; ++s) {
    for (std::size_t j = 0; j < n; ++j) buffer[j] *= half_potential[j];
    fft.forward();
    for (std::size_t j = 0; j < n; ++j) buffer[j] *= kinetic[j];
    fft.backward();
    for (std::size_t j = 0; j < n; ++j) buffer[j] *= half_potential[j];
  }
  return Eigen::Map<Eigen::VectorXcd>(buffer.data(), static_cast<Eigen::Index>(n));
}

OracleResult GridOracle::propagate(const Eigen::VectorXcd& psi_in,
                                   const BoostSchedule& schedule) const {
  const std::size_t n = z_.size();
  if (static_cast<std::size_t>(psi_in.size()) != n) {
    throw ParameterError("wavefunction does not match the oracle grid");
  }
  const double initial_norm = psi_in.squaredNorm() * spacing_;

  std::vector<Complex> buffer(psi_in.data(), psi_in.data() + n);
  if (!schedule.boosts.empty()) {
    const auto n_sub = static_cast<std::size_t>(std::ceil(schedule.dt / options_.max_substep));
    const double substep = schedule.dt / static_cast<double>(n_sub);

    FftPair fft(buffer);
    std::vector<Complex> half_potential(n), kinetic(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double damping = std::exp(-0.5 * absorber_rate * mask_[j] * substep);
      half_potential[j] = std::polar(damping, -0.5 * potential_[j] * substep / constants::hbar);
      kinetic[j] = std::polar(1.0 / static_cast<double>(n),
                              -constants::hbar * wavenumber_sq_[j] * substep /
                                  (2.0 * params_.atomic_mass()));
    }
    const double kick_scale = params_.atomic_mass() / constants::hbar;
    for (double dv : schedule.boosts) {
      if (dv != 0.0) {
        for (std::size_t j = 0; j < n; ++j) buffer[j] *= std::polar(1.0, -kick_scale * dv * z_[j]);
      }
      for (std::size_t s = 0; s < n_sub; ++s) {
        for (std::size_t j = 0; j < n; ++j) buffer[j] *= half_potential[j];
        fft.forward();
        for (std::size_t j = 0; j < n; ++j) buffer[j] *= kinetic[j];
        fft.backward();
        for (std::size_t j = 0; j < n; ++j) buffer[j] *= half_potential[j];
      }
    }
  }

  const Eigen::Map<const Eigen::VectorXcd> psi(buffer.data(), static_cast<Eigen::Index>(n));
  OracleResult result;
  result.populations = overlaps(psi);
  result.bound_population = result.populations.sum();
  result.retention = window_norm(psi);
  result.absorbed = initial_norm - psi.squaredNorm() * spacing_;
  return result;
}

OracleResult GridOracle::propagate(const OracleInitial& initial,
                                   const BoostSchedule& schedule) const {
  if (initial.kind == OracleInitial::Kind::eigenstate) {
    check_resolution(schedule, 0.0);
    return propagate(eigenstate(initial.index), schedule);
  }
  if (!(initial.temperature > 0.0)) throw ParameterError("thermal ensemble needs T > 0");
  check_resolution(schedule, initial.temperature);
  const std::size_t states =
      initial.n_states == 0 ? n_bound() : std::min(initial.n_states, n_bound());

  std::vector<double> weights(states);
  double total = 0.0;
  for (std::size_t i = 0; i < states; ++i) {
    weights[i] =
        std::exp(-(energies_[i] - energies_[0]) / (constants::boltzmann * initial.temperature));
    total += weights[i];
  }

  std::vector<OracleResult> runs(states);
  detail::parallel_for(states, 0, [&](std::size_t i) {
    if (weights[i] / total >= 1e-12) runs[i] = propagate(eigenstate(i), schedule);
  });

  OracleResult mixed;
  mixed.populations = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_bound()));
  for (std::size_t i = 0; i < states; ++i) {
    const double w = weights[i] / total;
    if (w < 1e-12) continue;
    mixed.retention += w * runs[i].retention;
    mixed.bound_population += w * runs[i].bound_population;
    mixed.absorbed += w * runs[i].absorbed;
    mixed.populations += w * runs[i].populations;
  }
  return mixed;
}

OracleResult propagate_grid(const OracleInitial& initial, const BoostSchedule& schedule,
                            const PhysicalParams& params, const OracleOptions& options) {
  return GridOracle(params, options).propagate(initial, schedule);
}

}  // namespace conveyor
