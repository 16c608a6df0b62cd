#include "conveyor/conveyor_operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "conveyor/errors.hpp"
#include "fftw_support.hpp"

namespace conveyor {

namespace {

void require_n_eff(const BoundSpectrum& spectrum, std::size_t n_eff) {
  if (n_eff < 1 || n_eff > spectrum.n_bound()) {
    throw ParameterError("n_eff = " + std::to_string(n_eff) + " outside [1, " +
                         std::to_string(spectrum.n_bound()) + "]");
  }
}

Eigen::VectorXd trapezoid_weights(const SpatialGrid& grid) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()),
                                                grid.spacing());
  w(0) *= 0.5;
  w(w.size() - 1) *= 0.5;
  return w;
}

// Band-limited displacement of the truncated eigenbasis: each column is
// resampled at z_j - shift through its discrete Fourier series (exactly real
// for the odd point count, which has no Nyquist bin). Samples whose source
// point lies outside the grid are zeroed instead of wrapped. The forward
// transforms are computed once; each shift costs one inverse transform.
class DisplacedBasis {
 public:
  DisplacedBasis(const BoundSpectrum& spectrum, std::size_t n_eff)
      : grid_(spectrum.grid),
        psi_(spectrum.eigenfunctions.leftCols(static_cast<Eigen::Index>(n_eff))),
        weights_(trapezoid_weights(spectrum.grid)),
        n_(static_cast<int>(psi_.rows())),
        howmany_(static_cast<int>(psi_.cols())),
        n_freq_(n_ / 2 + 1),
        coefficients_(static_cast<std::size_t>(n_freq_) * howmany_),
        work_(coefficients_.size()),
        displaced_(psi_.rows(), psi_.cols()) {
    Eigen::MatrixXd input = psi_;
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_plan forward = fftw_plan_many_dft_r2c(1, &n_, howmany_, input.data(), nullptr, 1, n_,
                                               reinterpret_cast<fftw_complex*>(coefficients_.data()),
                                               nullptr, 1, n_freq_, FFTW_ESTIMATE);
    fftw_execute(forward);
    fftw_destroy_plan(forward);
    backward_ = fftw_plan_many_dft_c2r(1, &n_, howmany_,
                                       reinterpret_cast<fftw_complex*>(work_.data()), nullptr, 1,
                                       n_freq_, displaced_.data(), nullptr, 1, n_, FFTW_ESTIMATE);
  }

  DisplacedBasis(const DisplacedBasis&) = delete;
  DisplacedBasis& operator=(const DisplacedBasis&) = delete;

  ~DisplacedBasis() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(backward_);
  }

  // <psi_i(z - shift) | psi_j(z)>
  Eigen::MatrixXd overlap(double shift) {
    if (shift == 0.0) return Eigen::MatrixXd::Identity(howmany_, howmany_);
    const double period = static_cast<double>(n_) * grid_.spacing();
    for (int k = 0; k < n_freq_; ++k) {
      const Complex ramp = std::polar(1.0 / n_, -constants::two_pi * k / period * shift);
      for (int c = 0; c < howmany_; ++c) {
        const std::size_t idx = static_cast<std::size_t>(c) * n_freq_ + k;
        work_[idx] = coefficients_[idx] * ramp;
      }
    }
    fftw_execute(backward_);
    const double lo = -grid_.half_width();
    const double hi = grid_.half_width();
    for (int j = 0; j < n_; ++j) {
      const double source = grid_.position(static_cast<std::size_t>(j)) - shift;
      if (source < lo || source > hi) displaced_.row(j).setZero();
    }
    return displaced_.transpose() * weights_.asDiagonal() * psi_;
  }

 private:
  SpatialGrid grid_;
  Eigen::MatrixXd psi_;
  Eigen::VectorXd weights_;
  int n_;
  int howmany_;
  int n_freq_;
  std::vector<Complex> coefficients_;
  std::vector<Complex> work_;
  Eigen::MatrixXd displaced_;
  fftw_plan backward_ = nullptr;
};

template <class Scalar>
double max_abs_difference(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
                          const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

Eigen::MatrixXcd boost_operator_exact(const BoundSpectrum& spectrum, std::size_t n_eff,
                                      double delta_v) {
  require_n_eff(spectrum, n_eff);
  const auto& grid = spectrum.grid;
  const auto psi = spectrum.eigenfunctions.leftCols(static_cast<Eigen::Index>(n_eff));
  const double q = spectrum.params.atomic_mass() * delta_v / constants::hbar;
  const Eigen::VectorXd w = trapezoid_weights(grid);

  Eigen::VectorXd w_cos(w.size()), w_sin(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double phase = q * grid.position(static_cast<std::size_t>(j));
    w_cos(j) = w(j) * std::cos(phase);
    w_sin(j) = -w(j) * std::sin(phase);
  }
  const Eigen::MatrixXd re = psi.transpose() * w_cos.asDiagonal() * psi;
  const Eigen::MatrixXd im = psi.transpose() * w_sin.asDiagonal() * psi;
  Eigen::MatrixXcd t(re.rows(), re.cols());
  t.real() = re;
  t.imag() = im;
  return t;
}

Eigen::VectorXcd free_propagator(const BoundSpectrum& spectrum, std::size_t n_eff, double dt) {
  require_n_eff(spectrum, n_eff);
  Eigen::VectorXcd phases(static_cast<Eigen::Index>(n_eff));
  for (std::size_t i = 0; i < n_eff; ++i) {
    phases(static_cast<Eigen::Index>(i)) =
        std::polar(1.0, -spectrum.energies[i] * dt / constants::hbar);
  }
  return phases;
}

double trap_minimum_shift(const PhysicalParams& params, double acceleration) {
  const double limit = params.max_acceleration();
  const double ratio = acceleration / limit;
  if (!(std::abs(ratio) <= 1.0)) throw MaxAccelerationExceeded(acceleration, limit);
  return -std::asin(ratio) / (2.0 * params.wavenumber());
}

Eigen::MatrixXd frame_transform_for_shift(const BoundSpectrum& spectrum, std::size_t n_eff,
                                          double shift) {
  require_n_eff(spectrum, n_eff);
  if (shift == 0.0) {
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_eff),
                                     static_cast<Eigen::Index>(n_eff));
  }
  DisplacedBasis basis(spectrum, n_eff);
  return basis.overlap(shift);
}

Eigen::MatrixXd frame_transform_exact(const BoundSpectrum& spectrum, std::size_t n_eff,
                                      double acceleration) {
  return frame_transform_for_shift(spectrum, n_eff,
                                   trap_minimum_shift(spectrum.params, acceleration));
}

Eigen::VectorXd dephasing_rates(const BoundSpectrum& spectrum, std::size_t n_eff, double gamma0) {
  require_n_eff(spectrum, n_eff);
  if (n_eff < 2) throw ParameterError("dephasing rates need at least two states");
  if (!(gamma0 >= 0.0)) throw ParameterError("gamma0 must be non-negative");

  const double quantum = constants::hbar * spectrum.params.harmonic_angular_frequency();
  const auto& e = spectrum.energies;
  Eigen::VectorXd deviation(static_cast<Eigen::Index>(n_eff));
  deviation(0) = quantum - 2.0 * (e[0] + spectrum.params.trap_depth());
  double largest = 0.0;
  for (std::size_t i = 1; i < n_eff; ++i) {
    deviation(static_cast<Eigen::Index>(i)) = quantum - (e[i] - e[i - 1]);
    largest = std::max(largest, deviation(static_cast<Eigen::Index>(i)));
  }
  if (largest <= 0.0) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_eff));
  return (2.0 * gamma0 / largest * deviation).cwiseMax(0.0);
}

Eigen::MatrixXd dephasing_matrix(const Eigen::VectorXd& rates, double dt) {
  const Eigen::VectorXd d = (-0.5 * dt * rates).array().exp();
  Eigen::MatrixXd m = d * d.transpose();
  m.diagonal().setOnes();
  return m;
}

// ---------------------------------------------------------------------------
// OperatorTable

template <class Scalar>
OperatorTable<Scalar>::OperatorTable(OperatorKind kind, std::size_t n_eff, double max_lookup,
                                     double scale, std::vector<double> nodes,
                                     std::vector<Scalar> data)
    : kind_(kind),
      n_eff_(n_eff),
      max_lookup_(max_lookup),
      scale_(scale),
      nodes_(std::move(nodes)),
      data_(std::move(data)) {
  if (nodes_.size() < 2) throw ParameterError("operator table needs at least two samples");
  if (data_.size() != nodes_.size() * n_eff_ * n_eff_) {
    throw ParameterError("operator table storage does not match its shape");
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) throw ParameterError("table nodes must increase");
  }
}

template <class Scalar>
double OperatorTable<Scalar>::to_node_coordinate(double x) const {
  if (kind_ == OperatorKind::frame) return std::asin(std::clamp(x / scale_, -1.0, 1.0));
  return x;
}

template <class Scalar>
double OperatorTable<Scalar>::from_node_coordinate(double u) const {
  if (kind_ == OperatorKind::frame) return scale_ * std::sin(u);
  return u;
}

template <class Scalar>
std::vector<double> OperatorTable<Scalar>::sample_points() const {
  std::vector<double> points(nodes_.size());
  std::transform(nodes_.begin(), nodes_.end(), points.begin(),
                 [this](double u) { return from_node_coordinate(u); });
  return points;
}

template <class Scalar>
typename OperatorTable<Scalar>::Matrix OperatorTable<Scalar>::sample(std::size_t index) const {
  const auto n = static_cast<Eigen::Index>(n_eff_);
  return Eigen::Map<const Matrix>(data_.data() + index * n_eff_ * n_eff_, n, n);
}

template <class Scalar>
typename OperatorTable<Scalar>::Matrix OperatorTable<Scalar>::at(double x) const {
  Matrix out;
  at(x, out);
  return out;
}

template <class Scalar>
void OperatorTable<Scalar>::at(double x, Matrix& out) const {
  if (!covers(x)) {
    std::ostringstream msg;
    msg << "lookup " << x << " outside operator table range +/-" << max_lookup_;
    throw RangeError(msg.str());
  }
  const double u = to_node_coordinate(x);
  const double step = (nodes_.back() - nodes_.front()) / static_cast<double>(nodes_.size() - 1);
  const double pos = (u - nodes_.front()) / step;
  const auto lower = static_cast<std::size_t>(
      std::clamp(std::floor(pos), 0.0, static_cast<double>(nodes_.size() - 2)));
  const double frac = pos - static_cast<double>(lower);

  const auto n = static_cast<Eigen::Index>(n_eff_);
  const std::size_t block = n_eff_ * n_eff_;
  Eigen::Map<const Matrix> a(data_.data() + lower * block, n, n);
  Eigen::Map<const Matrix> b(data_.data() + (lower + 1) * block, n, n);
  out.resize(n, n);
  if (frac == 0.0) {
    out = a;
  } else {
    out = (1.0 - frac) * a + frac * b;
  }
}

template class OperatorTable<Complex>;
template class OperatorTable<double>;

// ---------------------------------------------------------------------------
// Table construction

namespace {

template <class Scalar>
using ExactOperator =
    std::function<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>(double lookup)>;

std::vector<double> probe_points(double max_lookup, const TableOptions& options) {
  std::mt19937_64 rng(options.probe_seed);
  std::uniform_real_distribution<double> dist(-max_lookup, max_lookup);
  std::vector<double> probes(options.n_probes);
  for (auto& p : probes) p = dist(rng);
  return probes;
}

template <class Scalar>
TableAccuracy probe_accuracy(const OperatorTable<Scalar>& table, const ExactOperator<Scalar>& exact,
                             const std::vector<double>& probes) {
  TableAccuracy acc;
  acc.n_probes = probes.size();
  typename OperatorTable<Scalar>::Matrix interpolated;
  for (double x : probes) {
    table.at(x, interpolated);
    const double err = max_abs_difference<Scalar>(interpolated, exact(x));
    if (err >= acc.worst_error) {
      acc.worst_error = err;
      acc.worst_probe = x;
    }
  }
  return acc;
}

// Uniform nodes on [-node_max, node_max]. When `previous` holds the data of a
// table with (n_samples + 1) / 2 nodes on the same interval its matrices are
// reused for the even-indexed nodes.
template <class Scalar>
std::vector<Scalar> tabulate(std::size_t n_eff, const std::vector<double>& nodes,
                             const std::function<double(double)>& to_lookup,
                             const ExactOperator<Scalar>& exact,
                             const std::vector<Scalar>* previous) {
  const std::size_t block = n_eff * n_eff;
  std::vector<Scalar> data(nodes.size() * block);
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    Scalar* dst = data.data() + s * block;
    if (previous != nullptr && s % 2 == 0) {
      std::copy_n(previous->data() + (s / 2) * block, block, dst);
      continue;
    }
    const auto m = exact(to_lookup(nodes[s]));
    std::copy_n(m.data(), block, dst);
  }
  return data;
}

std::vector<double> uniform_nodes(double node_max, std::size_t n_samples) {
  std::vector<double> nodes(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    nodes[s] = -node_max + 2.0 * node_max * static_cast<double>(s) /
                               static_cast<double>(n_samples - 1);
  }
  nodes.front() = -node_max;
  nodes.back() = node_max;
  return nodes;
}

template <class Scalar>
OperatorTable<Scalar> build_table(OperatorKind kind, std::size_t n_eff, double max_lookup,
                                  double scale, const ExactOperator<Scalar>& exact,
                                  const TableOptions& options, std::size_t max_samples,
                                  bool refine) {
  if (!(max_lookup > 0.0)) throw ParameterError("table range must be positive");
  if (options.n_samples < 2) throw ParameterError("table needs at least two samples");

  const double node_max =
      kind == OperatorKind::frame ? std::asin(std::min(1.0, max_lookup / scale)) : max_lookup;
  const std::function<double(double)> to_lookup = [kind, scale](double u) {
    return kind == OperatorKind::frame ? scale * std::sin(u) : u;
  };
  const auto probes = probe_points(max_lookup, options);

  std::size_t n_samples = options.n_samples;
  std::vector<Scalar> data;
  const std::vector<Scalar>* reuse = nullptr;
  for (;;) {
    auto nodes = uniform_nodes(node_max, n_samples);
    data = tabulate<Scalar>(n_eff, nodes, to_lookup, exact, reuse);
    OperatorTable<Scalar> table(kind, n_eff, max_lookup, scale, std::move(nodes), data);
    const TableAccuracy acc = probe_accuracy(table, exact, probes);
    table.set_accuracy(acc);
    if (acc.worst_error <= options.tolerance) return table;

    const std::size_t next = 2 * n_samples - 1;
    if (!refine || next > max_samples) {
      std::ostringstream msg;
      msg << (kind == OperatorKind::boost ? "boost" : "frame") << " table with " << n_samples
          << " samples misses tolerance " << options.tolerance << ": worst error "
          << acc.worst_error << " at " << acc.worst_probe;
      throw VerificationError(msg.str(), acc.worst_error);
    }
    n_samples = next;
    reuse = &data;
  }
}

}  // namespace

BoostTable build_boost_table(const BoundSpectrum& spectrum, std::size_t n_eff, double max_dv,
                             const TableOptions& options) {
  require_n_eff(spectrum, n_eff);
  return build_table<Complex>(
      OperatorKind::boost, n_eff, max_dv, 1.0,
      [&](double dv) { return boost_operator_exact(spectrum, n_eff, dv); }, options,
      options.n_samples, false);
}

FrameTable build_frame_table(const BoundSpectrum& spectrum, std::size_t n_eff, double max_a,
                             const TableOptions& options) {
  require_n_eff(spectrum, n_eff);
  const double a_max = spectrum.params.max_acceleration();
  if (max_a > a_max) throw MaxAccelerationExceeded(max_a, a_max);
  DisplacedBasis basis(spectrum, n_eff);
  return build_table<double>(
      OperatorKind::frame, n_eff, max_a, a_max,
      [&](double a) { return basis.overlap(trap_minimum_shift(spectrum.params, a)); }, options,
      options.n_samples, false);
}

BoostTable build_boost_table_refined(const BoundSpectrum& spectrum, std::size_t n_eff,
                                     double max_dv, TableOptions options,
                                     std::size_t max_samples) {
  require_n_eff(spectrum, n_eff);
  return build_table<Complex>(
      OperatorKind::boost, n_eff, max_dv, 1.0,
      [&](double dv) { return boost_operator_exact(spectrum, n_eff, dv); }, options,
      max_samples, true);
}

FrameTable build_frame_table_refined(const BoundSpectrum& spectrum, std::size_t n_eff,
                                     double max_a, TableOptions options,
                                     std::size_t max_samples) {
  require_n_eff(spectrum, n_eff);
  const double a_max = spectrum.params.max_acceleration();
  if (max_a > a_max) throw MaxAccelerationExceeded(max_a, a_max);
  DisplacedBasis basis(spectrum, n_eff);
  return build_table<double>(
      OperatorKind::frame, n_eff, max_a, a_max,
      [&](double a) { return basis.overlap(trap_minimum_shift(spectrum.params, a)); }, options,
      max_samples, true);
}

double table_error(const BoostTable& table, const BoundSpectrum& spectrum,
                   const std::vector<double>& probes) {
  double worst = 0.0;
  for (double x : probes) {
    worst = std::max(worst, max_abs_difference<Complex>(
                                table.at(x), boost_operator_exact(spectrum, table.n_eff(), x)));
  }
  return worst;
}

double table_error(const FrameTable& table, const BoundSpectrum& spectrum,
                   const std::vector<double>& probes) {
  double worst = 0.0;
  for (double x : probes) {
    worst = std::max(worst, max_abs_difference<double>(
                                table.at(x), frame_transform_exact(spectrum, table.n_eff(), x)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// TableCache

namespace {

constexpr char cache_magic[4] = {'C', 'V', 'O', 'T'};

class Fnv1a {
 public:
  template <class T>
  void add(const T& value) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(&value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      hash_ ^= bytes[i];
      hash_ *= 1099511628211ull;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 14695981039346656037ull;
};

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool read_pod(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

template <class Scalar>
void store_table(const std::filesystem::path& path, const OperatorTable<Scalar>& table) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write table cache file " + tmp);
    out.write(cache_magic, sizeof(cache_magic));
    write_pod(out, TableCache::format_version);
    write_pod(out, static_cast<std::uint8_t>(table.kind()));
    write_pod(out, static_cast<std::uint64_t>(table.n_eff()));
    write_pod(out, static_cast<std::uint64_t>(table.n_samples()));
    write_pod(out, table.max_lookup());
    write_pod(out, table.scale());
    write_pod(out, table.accuracy().worst_error);
    write_pod(out, table.accuracy().worst_probe);
    write_pod(out, static_cast<std::uint64_t>(table.accuracy().n_probes));
    out.write(reinterpret_cast<const char*>(table.nodes().data()),
              static_cast<std::streamsize>(table.nodes().size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(table.data().data()),
              static_cast<std::streamsize>(table.data().size() * sizeof(Scalar)));
  }
  std::filesystem::rename(tmp, path);
}

template <class Scalar>
std::optional<OperatorTable<Scalar>> load_table(const std::filesystem::path& path,
                                                OperatorKind expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  std::uint32_t version = 0;
  std::uint8_t kind = 0;
  std::uint64_t n_eff = 0, n_samples = 0, n_probes = 0;
  double max_lookup = 0, scale = 0;
  TableAccuracy acc;
  if (!in.read(magic, 4) || std::memcmp(magic, cache_magic, 4) != 0) return std::nullopt;
  if (!read_pod(in, version) || version != TableCache::format_version) return std::nullopt;
  if (!read_pod(in, kind) || kind != static_cast<std::uint8_t>(expected)) return std::nullopt;
  if (!(read_pod(in, n_eff) && read_pod(in, n_samples) && read_pod(in, max_lookup) &&
        read_pod(in, scale) && read_pod(in, acc.worst_error) && read_pod(in, acc.worst_probe) &&
        read_pod(in, n_probes))) {
    return std::nullopt;
  }
  acc.n_probes = n_probes;
  std::vector<double> nodes(n_samples);
  std::vector<Scalar> data(n_samples * n_eff * n_eff);
  if (!in.read(reinterpret_cast<char*>(nodes.data()),
               static_cast<std::streamsize>(nodes.size() * sizeof(double))) ||
      !in.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(Scalar)))) {
    return std::nullopt;
  }
  OperatorTable<Scalar> table(expected, n_eff, max_lookup, scale, std::move(nodes),
                              std::move(data));
  table.set_accuracy(acc);
  return table;
}

}  // namespace

TableCache::TableCache(std::filesystem::path directory) : directory_(std::move(directory)) {}

std::string TableCache::key(const BoundSpectrum& spectrum, std::size_t n_eff, OperatorKind kind,
                            double max_lookup, double tolerance) const {
  Fnv1a h;
  h.add(format_version);
  h.add(spectrum.params.wavelength());
  h.add(spectrum.params.atomic_mass());
  h.add(spectrum.params.trap_depth());
  h.add(spectrum.grid.half_width());
  h.add(static_cast<std::uint64_t>(spectrum.grid.size()));
  h.add(static_cast<std::uint64_t>(n_eff));
  h.add(static_cast<std::uint8_t>(kind));
  h.add(max_lookup);
  h.add(tolerance);
  std::ostringstream out;
  out << (kind == OperatorKind::boost ? "boost-" : "frame-") << std::hex << h.value();
  return out.str();
}

std::optional<BoostTable> TableCache::load_boost(const std::string& key) const {
  return load_table<Complex>(directory_ / (key + ".bin"), OperatorKind::boost);
}

std::optional<FrameTable> TableCache::load_frame(const std::string& key) const {
  return load_table<double>(directory_ / (key + ".bin"), OperatorKind::frame);
}

void TableCache::store(const std::string& key, const BoostTable& table) const {
  store_table(directory_ / (key + ".bin"), table);
}

void TableCache::store(const std::string& key, const FrameTable& table) const {
  store_table(directory_ / (key + ".bin"), table);
}

}  // namespace conveyor
