#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "core.hpp"
#include "errors.hpp"

namespace riccati {

namespace detail {

inline void require_square(const Mat& x, const char* what) {
  if (x.rows() != x.cols())
    throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
}

inline void require_finite(const Mat& x, const char* what) {
  if (!x.allFinite())
    throw RiccatiError(std::string(what) + ": non-finite entries");
}

}  // namespace detail

/// Dense real symmetric matrix. Symmetry is enforced on construction by
/// averaging with the transpose, so (i,j) and (j,i) agree exactly.
class SymMat {
 public:
  SymMat() = default;

  explicit SymMat(const Mat& x) {
    detail::require_square(x, "symmetric matrix");
    m_ = (x + x.transpose()) * 0.5;
    detail::require_finite(m_, "symmetric matrix");
  }

  const Mat& mat() const { return m_; }
  Index dim() const { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Mat m_;
};

/// (X + X')/2 as a SymMat.
inline SymMat symmetrize(const Mat& x) { return SymMat(x); }

enum class Definiteness {
  PositiveDefinite,
  NegativeDefinite,
  PositiveSemidefinite,
  NegativeSemidefinite,
  Indefinite,
};

struct DefinitenessReport {
  Definiteness classification;
  double min_eig;
  double max_eig;
  double band;  ///< half-width of the zero band actually applied
};

/// Eigenvalue classification with a zero band of tolerance * max|eig|.
/// Every call is counted in instrument::definiteness_checks.
inline DefinitenessReport classify_definiteness(const SymMat& s,
                                                double tolerance = tol::eps_def) {
  ++instrument::definiteness_checks;
  Eigen::SelfAdjointEigenSolver<Mat> es(s.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw RiccatiError("classify_definiteness: eigendecomposition failed");
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(s.dim() - 1);
  const double band = tolerance * std::max(std::abs(lo), std::abs(hi));
  Definiteness c;
  if (lo > band)
    c = Definiteness::PositiveDefinite;
  else if (hi < -band)
    c = Definiteness::NegativeDefinite;
  else if (lo >= -band)
    c = Definiteness::PositiveSemidefinite;
  else if (hi <= band)
    c = Definiteness::NegativeSemidefinite;
  else
    c = Definiteness::Indefinite;
  return {c, lo, hi, band};
}

/// Largest singular value.
inline double spectral_norm(const Mat& x) {
  if (x.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(x).singularValues()(0);
}

/// Inverse guarded by a singular-value screen: throws SingularMatrix when
/// sigma_min < rank_tol * sigma_max. rank_tol <= 0 selects dim * eps_machine.
inline Mat inverse(const Mat& x, double rank_tol = 0.0) {
  detail::require_square(x, "inverse");
  detail::require_finite(x, "inverse");
  Eigen::JacobiSVD<Mat> svd(x);
  const Vec& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cut =
      rank_tol > 0.0
          ? rank_tol
          : static_cast<double>(x.rows()) * std::numeric_limits<double>::epsilon();
  if (smax == 0.0 || smin < cut * smax)
    throw SingularMatrix("inverse: singular within tolerance, sigma_min/sigma_max = " +
                         std::to_string(smax == 0.0 ? 0.0 : smin / smax));
  return x.partialPivLu().inverse();
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix via eigendecomposition.
/// Eigenvalues with |eig| <= rank_tol * max|eig| are zeroed; rank_tol <= 0
/// selects dim * eps_machine.
inline SymMat pseudo_inverse(const SymMat& s, double rank_tol = 0.0) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s.mat());
  if (es.info() != Eigen::Success)
    throw RiccatiError("pseudo_inverse: eigendecomposition failed");
  const Vec& ev = es.eigenvalues();
  const double amax = ev.cwiseAbs().maxCoeff();
  const double cut =
      (rank_tol > 0.0
           ? rank_tol
           : static_cast<double>(s.dim()) * std::numeric_limits<double>::epsilon()) *
      amax;
  Vec inv(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    inv(i) = std::abs(ev(i)) > cut ? 1.0 / ev(i) : 0.0;
  return SymMat(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

/// Principal square root of a symmetric positive-semidefinite matrix.
/// Eigenvalues in [-tol*max|eig|, 0) are clamped to zero; anything lower
/// raises NotPSD.
inline SymMat sqrtm_spd(const SymMat& s, double tolerance = tol::eps_def) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s.mat());
  if (es.info() != Eigen::Success)
    throw RiccatiError("sqrtm_spd: eigendecomposition failed");
  const Vec& ev = es.eigenvalues();
  const double amax = ev.cwiseAbs().maxCoeff();
  if (ev(0) < -tolerance * amax)
    throw NotPSD("sqrtm_spd: eigenvalue " + std::to_string(ev(0)) +
                 " below the positive-semidefinite tolerance");
  const Vec root = ev.cwiseMax(0.0).cwiseSqrt();
  return SymMat(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

namespace detail {

inline Mat expm_pade(const Mat& a, const double* b, int m) {
  const Index n = a.rows();
  const Mat a2 = a * a;
  Mat u, v;
  if (m == 13) {
    const Mat a4 = a2 * a2;
    const Mat a6 = a4 * a2;
    u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
             b[3] * a2 + b[1] * Mat::Identity(n, n));
    v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
        b[2] * a2 + b[0] * Mat::Identity(n, n);
  } else {
    Mat pow = Mat::Identity(n, n);
    u = b[1] * pow;
    v = b[0] * pow;
    for (int j = 1; 2 * j <= m; ++j) {
      pow = pow * a2;
      u += b[2 * j + 1] * pow;
      v += b[2 * j] * pow;
    }
    u = a * u;
  }
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with diagonal Pade
/// approximants of degree 3/5/7/9/13 selected from the 1-norm.
inline Mat expm(const Mat& x) {
  detail::require_square(x, "expm");
  detail::require_finite(x, "expm");
  static const double b3[] = {120., 60., 12., 1.};
  static const double b5[] = {30240., 15120., 3360., 420., 30., 1.};
  static const double b7[] = {17297280., 8648640., 1995840., 277200.,
                              25200.,    1512.,    56.,      1.};
  static const double b9[] = {17643225600., 8821612800., 2075673600.,
                              302702400.,   30270240.,   2162160.,
                              110880.,      3960.,       90.,
                              1.};
  static const double b13[] = {64764752532480000., 32382376266240000.,
                               7771770303897600.,  1187353796428800.,
                               129060195264000.,   10559470521600.,
                               670442572800.,      33522128640.,
                               1323241920.,        40840800.,
                               960960.,            16380.,
                               182.,               1.};
  static constexpr double theta3 = 1.495585217958292e-2;
  static constexpr double theta5 = 2.539398330063230e-1;
  static constexpr double theta7 = 9.504178996162932e-1;
  static constexpr double theta9 = 2.097847961257068e0;
  static constexpr double theta13 = 5.371920351148152e0;

  const double norm = x.cwiseAbs().colwise().sum().maxCoeff();
  if (norm <= theta3) return detail::expm_pade(x, b3, 3);
  if (norm <= theta5) return detail::expm_pade(x, b5, 5);
  if (norm <= theta7) return detail::expm_pade(x, b7, 7);
  if (norm <= theta9) return detail::expm_pade(x, b9, 9);

  int s = 0;
  if (norm > theta13) {
    int e = 0;
    std::frexp(norm / theta13, &e);
    s = std::max(e, 0);
  }
  Mat f = detail::expm_pade(x * std::ldexp(1.0, -s), b13, 13);
  for (int i = 0; i < s; ++i) f = f * f;
  return f;
}

/// Symmetric 2n x 2n matrix held as named n x n blocks; the 21 block is
/// implied as b12'. assemble() therefore returns an exactly symmetric matrix.
class BlockSym2n {
 public:
  BlockSym2n() = default;

  BlockSym2n(SymMat b11, Mat b12, SymMat b22)
      : b11_(std::move(b11)), b22_(std::move(b22)), b12_(std::move(b12)) {
    if (b12_.rows() != b11_.dim() || b12_.cols() != b11_.dim() ||
        b22_.dim() != b11_.dim())
      throw DimensionError("BlockSym2n: blocks must share one n x n shape");
    detail::require_finite(b12_, "BlockSym2n b12");
  }

  /// Split a full 2n x 2n matrix into blocks, requiring overall asymmetry
  /// at most asym_tol (max-abs).
  static BlockSym2n from_full(const Mat& full, double asym_tol = tol::sym_check) {
    detail::require_square(full, "BlockSym2n");
    if (full.rows() % 2 != 0)
      throw DimensionError("BlockSym2n: dimension must be even");
    const double asym = (full - full.transpose()).cwiseAbs().maxCoeff();
    if (asym > asym_tol)
      throw SymmetryViolation("BlockSym2n: asymmetry " + std::to_string(asym) +
                              " exceeds " + std::to_string(asym_tol));
    const Index n = full.rows() / 2;
    const Mat sym = (full + full.transpose()) * 0.5;
    return BlockSym2n(SymMat(sym.topLeftCorner(n, n)), sym.topRightCorner(n, n),
                      SymMat(sym.bottomRightCorner(n, n)));
  }

  const SymMat& b11() const { return b11_; }
  const Mat& b12() const { return b12_; }
  const SymMat& b22() const { return b22_; }
  Mat b21() const { return b12_.transpose(); }
  Index n() const { return b11_.dim(); }

  Mat assemble() const {
    const Index d = n();
    Mat out(2 * d, 2 * d);
    out.topLeftCorner(d, d) = b11_.mat();
    out.topRightCorner(d, d) = b12_;
    out.bottomLeftCorner(d, d) = b12_.transpose();
    out.bottomRightCorner(d, d) = b22_.mat();
    return out;
  }

 private:
  SymMat b11_, b22_;
  Mat b12_;
};

}  // namespace riccati
