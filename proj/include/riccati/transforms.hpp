#pragma once

#include <string>

#include "errors.hpp"
#include "matrix_ops.hpp"
#include "system.hpp"

namespace riccati {

namespace detail {

inline void require_basis_dim(Index dim, const BasisMatrix& basis,
                              const char* what) {
  if (dim != basis.dim())
    throw DimensionError(std::string(what) +
                         ": operand dimension does not match the basis");
}

inline Mat domain_inverse(const Mat& x, const char* what) {
  try {
    return inverse(x);
  } catch (const SingularMatrix&) {
    throw DomainViolation(std::string(what));
  }
}

/// Assemble a block-symmetric result from raw formula output, verifying the
/// symmetry the exact arithmetic guarantees. Asymmetry beyond tol::sym_check
/// signals an operand outside the transform's domain.
inline BlockSym2n checked_blocks(const Mat& b11, const Mat& b12,
                                 const Mat& b21, const Mat& b22,
                                 const char* what) {
  const double asym =
      std::max({(b11 - b11.transpose()).cwiseAbs().maxCoeff(),
                (b22 - b22.transpose()).cwiseAbs().maxCoeff(),
                (b21 - b12.transpose()).cwiseAbs().maxCoeff()});
  if (asym > tol::sym_check)
    throw SymmetryViolation(std::string(what) + ": result asymmetry " +
                            std::to_string(asym) + " exceeds tolerance");
  return BlockSym2n(symmetrize(b11), 0.5 * (b12 + b21.transpose()),
                    symmetrize(b22));
}

}  // namespace detail

/// Block lift of P against the basis: [[P, -M], [-M, M]].
inline BlockSym2n mu(const SymMat& p, const BasisMatrix& basis) {
  detail::require_basis_dim(p.dim(), basis, "mu");
  const Mat& m = basis.M.mat();
  return BlockSym2n(p, -m, basis.M);
}

/// Semiconvex dual shift: -M - M (P - M)^{-1} M, defined where P - M is
/// positive definite.
inline SymMat upsilon(const SymMat& p, const BasisMatrix& basis) {
  detail::require_basis_dim(p.dim(), basis, "upsilon");
  const Mat& m = basis.M.mat();
  const SymMat gap(p.mat() - m);
  if (classify_definiteness(gap).classification !=
      Definiteness::PositiveDefinite)
    throw DomainViolation("upsilon: P - M is not positive definite");
  return symmetrize(-m - m * inverse(gap.mat()) * m);
}

/// Inverse shift: M - M (P + M)^{-1} M, defined where P + M is negative
/// definite.
inline SymMat upsilon_inv(const SymMat& p, const BasisMatrix& basis) {
  detail::require_basis_dim(p.dim(), basis, "upsilon_inv");
  const Mat& m = basis.M.mat();
  const SymMat gap(p.mat() + m);
  if (classify_definiteness(gap).classification !=
      Definiteness::NegativeDefinite)
    throw DomainViolation("upsilon_inv: P + M is not negative definite");
  return symmetrize(m - m * inverse(gap.mat()) * m);
}

/// Kernel of the dualized flow: maps the 2n x 2n flow matrix Sigma to the
/// block-symmetric quadratic kernel Q with
///   Q11 = (Sigma21 + Sigma22 M) W,      W = (Sigma11 + Sigma12 M)^{-1},
///   Q12 = Q11 Sigma12 M - Sigma22 M,
///   Q21 = -M W,
///   Q22 = Q21 Sigma12 M + M.
inline BlockSym2n xi(const Mat& sigma, const BasisMatrix& basis) {
  const Index n = basis.dim();
  if (sigma.rows() != 2 * n || sigma.cols() != 2 * n)
    throw DimensionError("xi: flow matrix does not match the basis dimension");
  detail::require_finite(sigma, "xi");
  const Mat& m = basis.M.mat();
  const Mat s11 = sigma.topLeftCorner(n, n);
  const Mat s12 = sigma.topRightCorner(n, n);
  const Mat s21 = sigma.bottomLeftCorner(n, n);
  const Mat s22 = sigma.bottomRightCorner(n, n);

  const Mat w =
      detail::domain_inverse(s11 + s12 * m, "xi: Sigma11 + Sigma12 M is singular");
  const Mat b11 = (s21 + s22 * m) * w;
  const Mat b12 = b11 * s12 * m - s22 * m;
  const Mat b21 = -m * w;
  const Mat b22 = b21 * s12 * m + m;
  return detail::checked_blocks(b11, b12, b21, b22, "xi");
}

/// Inverse kernel map: recovers the flow matrix from Q via
///   T = (Q21)^{-1},
///   Sigma11 = -T Q22,        Sigma12 = -T (M - Q22) M^{-1},
///   Sigma21 = Q11 Sigma11 + Q12,
///   Sigma22 = Q11 Sigma12 - Q12 M^{-1}.
inline Mat xi_inv(const BlockSym2n& q, const BasisMatrix& basis) {
  const Index n = basis.dim();
  if (q.n() != n)
    throw DimensionError("xi_inv: kernel dimension does not match the basis");
  const Mat& m = basis.M.mat();
  const Mat& m_inv = basis.M_inv.mat();
  const Mat t = detail::domain_inverse(q.b21(), "xi_inv: Q21 is singular");
  const Mat s11 = -t * q.b22().mat();
  const Mat s12 = -t * (m - q.b22().mat()) * m_inv;
  const Mat s21 = q.b11().mat() * s11 + q.b12();
  const Mat s22 = q.b11().mat() * s12 - q.b12() * m_inv;

  Mat sigma(2 * n, 2 * n);
  sigma.topLeftCorner(n, n) = s11;
  sigma.topRightCorner(n, n) = s12;
  sigma.bottomLeftCorner(n, n) = s21;
  sigma.bottomRightCorner(n, n) = s22;
  return sigma;
}

/// Partial dual in the second argument: with V = (M + Lambda22)^{-1},
///   Q11 = Lambda11 - Lambda12 V Lambda12',
///   Q12 = Lambda12 V M,
///   Q21 = M V Lambda12',
///   Q22 = M - M V M,
/// defined where Lambda22 + M is negative definite.
inline BlockSym2n pi(const BlockSym2n& lambda, const BasisMatrix& basis) {
  const Index n = basis.dim();
  if (lambda.n() != n)
    throw DimensionError("pi: kernel dimension does not match the basis");
  const Mat& m = basis.M.mat();
  const SymMat pencil(lambda.b22().mat() + m);
  if (classify_definiteness(pencil).classification !=
      Definiteness::NegativeDefinite)
    throw DomainViolation("pi: Lambda22 + M is not negative definite");
  const Mat v = inverse(pencil.mat());
  const Mat& l11 = lambda.b11().mat();
  const Mat& l12 = lambda.b12();
  const Mat b11 = l11 - l12 * v * l12.transpose();
  const Mat b12 = l12 * v * m;
  const Mat b21 = m * v * l12.transpose();
  const Mat b22 = m - m * v * m;
  return detail::checked_blocks(b11, b12, b21, b22, "pi");
}

/// Inverse partial dual: with U = (M - Q22)^{-1},
///   Lambda11 = Q11 + Q12 U Q12',
///   Lambda12 = Q12 U M,
///   Lambda21 = M U Q12',
///   Lambda22 = M U M - M,
/// defined where Q22 - M is positive definite.
inline BlockSym2n pi_inv(const BlockSym2n& q, const BasisMatrix& basis) {
  const Index n = basis.dim();
  if (q.n() != n)
    throw DimensionError("pi_inv: kernel dimension does not match the basis");
  const Mat& m = basis.M.mat();
  const SymMat gap(q.b22().mat() - m);
  if (classify_definiteness(gap).classification !=
      Definiteness::PositiveDefinite)
    throw DomainViolation("pi_inv: Q22 - M is not positive definite");
  const Mat u = inverse(m - q.b22().mat());
  const Mat& q11 = q.b11().mat();
  const Mat& q12 = q.b12();
  const Mat b11 = q11 + q12 * u * q12.transpose();
  const Mat b12 = q12 * u * m;
  const Mat b21 = m * u * q12.transpose();
  const Mat b22 = m * u * m - m;
  return detail::checked_blocks(b11, b12, b21, b22, "pi_inv");
}

}  // namespace riccati
