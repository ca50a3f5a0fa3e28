#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace riccati {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

namespace tol {

/// Definiteness band: eigenvalues within eps_def * max|eig| of zero are
/// treated as sitting on the cone boundary.
inline constexpr double eps_def = 1e-9;

/// Relative rank cutoff of the pseudo-inverse inside the semigroup product.
inline constexpr double ostar_rank = 1e-12;

/// sigma_min/sigma_max threshold below which the symplectic scan declares
/// an X block singular.
inline constexpr double scan_rank = 1e-8;

/// Max-abs asymmetry allowed in the symmetric blocks of transform outputs.
inline constexpr double sym_check = 1e-6;

/// Default absolute and relative tolerance of the reference integrator.
inline constexpr double ode_tol = 1e-12;

/// Spectral-norm threshold at which the reference integrator declares escape.
inline constexpr double blow_up = 1e9;

}  // namespace tol

namespace instrument {

/// Call counters behind the escape-test cost comparison. Thread-local so
/// measurements are not polluted by concurrent solves.
inline thread_local std::uint64_t definiteness_checks = 0;
inline thread_local std::uint64_t invertibility_checks = 0;

inline void reset() {
  definiteness_checks = 0;
  invertibility_checks = 0;
}

}  // namespace instrument

}  // namespace riccati
