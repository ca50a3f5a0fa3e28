#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "errors.hpp"
#include "matrix_ops.hpp"
#include "solution_types.hpp"
#include "system.hpp"
#include "textio.hpp"

namespace riccati {

/// Fundamental flow Sigma_t = expm(H t) of the Hamiltonian two-point
/// boundary dynamics, with the computed matrices cached per time.
class SymplecticFlow {
 public:
  explicit SymplecticFlow(LinearSystem sys)
      : sys_(std::move(sys)), h_(hamiltonian(sys_)) {}

  const LinearSystem& sys() const { return sys_; }
  const Mat& hamiltonian_matrix() const { return h_; }

  Mat sigma_at(double t) const {
    if (!(t >= 0.0)) throw RiccatiError("sigma_at: time must be nonnegative");
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    Mat s = (t == 0.0) ? Mat::Identity(h_.rows(), h_.cols()) : expm(h_ * t);
    cache_.emplace(t, s);
    return s;
  }

 private:
  LinearSystem sys_;
  Mat h_;
  mutable std::mutex mutex_;
  mutable std::map<double, Mat> cache_;
};

namespace detail {

struct XYPair {
  Mat X;
  Mat Y;
};

/// Characteristic blocks of the propagated graph [I; P0]:
/// X = Sigma11 + Sigma12 P0, Y = Sigma21 + Sigma22 P0.
inline XYPair xy_blocks(const Mat& sigma, const SymMat& p0) {
  const Index n = p0.dim();
  if (sigma.rows() != 2 * n || sigma.cols() != 2 * n)
    throw DimensionError("xy_blocks: flow matrix does not match P0 dimension");
  XYPair out;
  out.X = sigma.topLeftCorner(n, n) + sigma.topRightCorner(n, n) * p0.mat();
  out.Y = sigma.bottomLeftCorner(n, n) + sigma.bottomRightCorner(n, n) * p0.mat();
  return out;
}

}  // namespace detail

/// P_t = Y_t X_t^{-1} from the propagated graph. Throws EscapeEncountered
/// when X_t is singular within rank_tol (the solution has left the class of
/// finite symmetric matrices at or before t).
inline SymMat solve_symplectic(const SymplecticFlow& flow, const SymMat& p0,
                               double t, double rank_tol = tol::scan_rank) {
  const auto xy = detail::xy_blocks(flow.sigma_at(t), p0);
  ++instrument::invertibility_checks;
  Eigen::JacobiSVD<Mat> svd(xy.X);
  const Vec& sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(sv.size() - 1) < rank_tol * sv(0))
    throw EscapeEncountered(
        "characteristic block X_t is singular at t = " + format_double(t), t);
  const Mat x_inv = xy.X.partialPivLu().inverse();
  return symmetrize(xy.Y * x_inv);
}

/// Grid scan for finite escape: at each node the invertibility of X_t is
/// probed (one singular-value screen per node, counted by the instrumentation
/// layer) and the determinant sign is compared with the previous node, since
/// an escape between nodes flips sign without X being singular at either one.
inline EscapeReport escape_scan_symplectic(const SymplecticFlow& flow,
                                           const SymMat& p0, double t_max,
                                           double dt,
                                           double rank_tol = tol::scan_rank) {
  if (!(t_max > 0.0)) throw RiccatiError("escape_scan_symplectic: t_max must be positive");
  if (!(dt > 0.0) || dt > t_max)
    throw RiccatiError("escape_scan_symplectic: dt must lie in (0, t_max]");

  EscapeReport report;
  report.p0 = p0;
  const long long k_max = static_cast<long long>(std::floor(t_max / dt + 1e-9));
  double prev_det = 1.0;
  double prev_t = 0.0;
  for (long long k = 1; k <= k_max; ++k) {
    const double t = grid_time(k, dt);
    const auto xy = detail::xy_blocks(flow.sigma_at(t), p0);
    ++instrument::invertibility_checks;
    Eigen::JacobiSVD<Mat> svd(xy.X);
    const Vec& sv = svd.singularValues();
    const bool near_singular =
        sv(0) == 0.0 || sv(sv.size() - 1) < rank_tol * sv(0);
    const double det = xy.X.partialPivLu().determinant();
    const bool sign_flip =
        det == 0.0 || std::signbit(det) != std::signbit(prev_det);
    if (near_singular || sign_flip) {
      report.escape_bracket = {prev_t, t};
      report.verdict = EscapeVerdict::EscapeInBracket;
      return report;
    }
    prev_det = det;
    prev_t = t;
  }
  report.verdict = EscapeVerdict::NoEscapeWithinHorizon;
  return report;
}

}  // namespace riccati
