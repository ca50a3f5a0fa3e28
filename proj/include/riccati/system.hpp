#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "core.hpp"
#include "errors.hpp"
#include "matrix_ops.hpp"

namespace riccati {

/// State-space triple (A, B, C) with the composite products BB' and C'C
/// cached at construction.
class LinearSystem {
 public:
  LinearSystem(Mat a, Mat b, Mat c)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    detail::require_square(a_, "LinearSystem A");
    if (b_.rows() != a_.rows())
      throw DimensionError("LinearSystem: B must have as many rows as A");
    if (c_.cols() != a_.rows())
      throw DimensionError("LinearSystem: C must have as many columns as A");
    detail::require_finite(a_, "LinearSystem A");
    detail::require_finite(b_, "LinearSystem B");
    detail::require_finite(c_, "LinearSystem C");
    bbt_ = b_ * b_.transpose();
    ctc_ = c_.transpose() * c_;
  }

  const Mat& A() const { return a_; }
  const Mat& B() const { return b_; }
  const Mat& C() const { return c_; }
  const Mat& BBt() const { return bbt_; }
  const Mat& CtC() const { return ctc_; }
  Index n() const { return a_.rows(); }
  Index m() const { return b_.cols(); }
  Index p() const { return c_.rows(); }

 private:
  Mat a_, b_, c_;
  Mat bbt_, ctc_;
};

/// Hamiltonian block matrix [[-A, -BB'], [C'C, A']] generating the flow.
inline Mat hamiltonian(const LinearSystem& sys) {
  const Index n = sys.n();
  Mat h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = -sys.A();
  h.topRightCorner(n, n) = -sys.BBt();
  h.bottomLeftCorner(n, n) = sys.CtC();
  h.bottomRightCorner(n, n) = sys.A().transpose();
  return h;
}

/// Rank test on [B, AB, ..., A^{n-1}B] with singular values below
/// rank_tol * sigma_max treated as zero.
inline bool is_controllable(const LinearSystem& sys, double rank_tol = 1e-9) {
  const Index n = sys.n();
  const Index m = sys.m();
  Mat ctrb(n, n * m);
  Mat block = sys.B();
  for (Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = block;
    block = sys.A() * block;
  }
  Eigen::JacobiSVD<Mat> svd(ctrb);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return false;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * sv(0)) ++rank;
  return rank == n;
}

/// Stabilizing solution M0 of 0 = A'M0 + M0 A + M0 BB' M0 + C'C, obtained
/// from the stable invariant subspace of [[A, BB'], [-C'C, -A']]. The
/// returned M0 makes A + BB'M0 Hurwitz and has residual max-abs <= 1e-8.
inline SymMat solve_are_stabilizing(const LinearSystem& sys) {
  const Index n = sys.n();
  Mat ham(2 * n, 2 * n);
  ham.topLeftCorner(n, n) = sys.A();
  ham.topRightCorner(n, n) = sys.BBt();
  ham.bottomLeftCorner(n, n) = -sys.CtC();
  ham.bottomRightCorner(n, n) = -sys.A().transpose();

  Eigen::EigenSolver<Mat> es(ham);
  if (es.info() != Eigen::Success)
    throw RiccatiError("solve_are_stabilizing: eigendecomposition failed");
  const Eigen::VectorXcd& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  const double axis_tol = 1e-8 * std::max(1.0, scale);

  Eigen::MatrixXcd x1(n, n), x2(n, n);
  Index found = 0;
  for (Index i = 0; i < 2 * n; ++i) {
    if (ev(i).real() >= -axis_tol) continue;
    if (found == n) {
      ++found;
      break;
    }
    x1.col(found) = es.eigenvectors().block(0, i, n, 1);
    x2.col(found) = es.eigenvectors().block(n, i, n, 1);
    ++found;
  }
  if (found != n)
    throw NoStabilizingSolution(
        "stable eigenspace has dimension " + std::to_string(found) +
        ", expected " + std::to_string(n) +
        " (eigenvalues on or near the imaginary axis)");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(x1);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(sv.size() - 1) < 1e-12 * sv(0))
    throw NoStabilizingSolution("stable eigenspace basis is rank-deficient");

  const Eigen::MatrixXcd m0c = x2 * x1.partialPivLu().inverse();
  const SymMat m0 = symmetrize(m0c.real());

  const Mat residual = sys.A().transpose() * m0.mat() + m0.mat() * sys.A() +
                       m0.mat() * sys.BBt() * m0.mat() + sys.CtC();
  const double res = residual.cwiseAbs().maxCoeff();
  if (res > 1e-8)
    throw NoStabilizingSolution("residual max-abs " + std::to_string(res) +
                                " exceeds 1e-8");

  Eigen::EigenSolver<Mat> cls(sys.A() + sys.BBt() * m0.mat());
  if (cls.eigenvalues().real().maxCoeff() >= 0.0)
    throw NoStabilizingSolution("candidate solution does not stabilize A + BB'M0");
  return m0;
}

/// Basis data for the duality transforms: invertible M, its cached inverse,
/// and the stabilizing solution M0 used to construct or validate it.
struct BasisMatrix {
  SymMat M;
  SymMat M_inv;
  std::optional<SymMat> M0;

  Index dim() const { return M.dim(); }
};

namespace detail {

inline double min_abs_eig(const SymMat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

}  // namespace detail

/// Validate M and assemble the BasisMatrix. Requires min|eig(M)| > eps_def
/// and, when M0 is known, M - M0 negative definite.
inline BasisMatrix make_basis(const SymMat& m, std::optional<SymMat> m0) {
  if (detail::min_abs_eig(m) <= tol::eps_def)
    throw InvalidUserBasis("basis matrix is singular within tolerance");
  if (m0) {
    if (m0->dim() != m.dim())
      throw DimensionError("make_basis: M and M0 dimensions differ");
    const auto rep = classify_definiteness(SymMat(m.mat() - m0->mat()));
    if (rep.classification != Definiteness::NegativeDefinite)
      throw InvalidUserBasis(
          "basis matrix must sit strictly below the stabilizing solution "
          "(max eigenvalue of M - M0 is " +
          std::to_string(rep.max_eig) + ")");
  }
  SymMat m_inv = symmetrize(inverse(m.mat()));
  return BasisMatrix{m, std::move(m_inv), std::move(m0)};
}

/// Automatic basis: M = M0 - margin*I, with the margin grown by 10% (at most
/// 20 times) whenever the shift lands on a singular M.
inline BasisMatrix select_basis(const LinearSystem& sys, double margin = 1.0) {
  if (margin <= 0.0) throw RiccatiError("select_basis: margin must be positive");
  const SymMat m0 = solve_are_stabilizing(sys);
  double shift = margin;
  for (int attempt = 0; attempt < 20; ++attempt) {
    const SymMat m(m0.mat() - shift * Mat::Identity(sys.n(), sys.n()));
    if (detail::min_abs_eig(m) > tol::eps_def) return make_basis(m, m0);
    shift *= 1.1;
  }
  throw RiccatiError("select_basis: no invertible shift found in 20 attempts");
}

/// User-supplied basis: validated for invertibility, and against M0 when the
/// ARE is solvable; without a stabilizing solution the ordering check is
/// skipped and the caller's M is trusted.
inline BasisMatrix select_basis(const LinearSystem& sys, const SymMat& user_m) {
  if (user_m.dim() != sys.n())
    throw DimensionError("select_basis: M dimension does not match the system");
  std::optional<SymMat> m0;
  try {
    m0 = solve_are_stabilizing(sys);
  } catch (const NoStabilizingSolution&) {
  }
  return make_basis(user_m, std::move(m0));
}

}  // namespace riccati
