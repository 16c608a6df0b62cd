#pragma once

#include <complex>
#include <random>

#include "conveyor/conveyor_operators.hpp"
#include "conveyor/lattice_spectrum.hpp"

namespace testing {

inline const conveyor::PhysicalParams& default_params() {
  static const auto p = conveyor::PhysicalParams::rb87_1064nm(254.0);
  return p;
}

inline const conveyor::BoundSpectrum& default_spectrum() {
  static const auto s =
      conveyor::solve_bound_spectrum(default_params(), conveyor::SpatialGrid::for_site(default_params()));
  return s;
}

inline constexpr double microkelvin = 1e-6 * conveyor::constants::boltzmann;

// Random density matrix G G^+ / tr(G G^+), rank `rank`.
inline Eigen::MatrixXcd random_density(std::mt19937_64& rng, Eigen::Index n, Eigen::Index rank) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(n, rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < rank; ++j) m(i, j) = {g(rng), g(rng)};
  }
  Eigen::MatrixXcd rho = m * m.adjoint();
  return rho / rho.trace().real();
}

inline double min_eigenvalue(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()),
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace testing
