#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix_ops.hpp"
#include "solution_types.hpp"
#include "system.hpp"
#include "transforms.hpp"

namespace riccati {

/// Adaptive integrator settings. Tolerances must lie in (0, 1);
/// blow_up_threshold is the spectral norm above which the path is declared
/// escaped and the trace truncated.
struct IntegratorConfig {
  double abs_tol = tol::ode_tol;
  double rel_tol = tol::ode_tol;
  double max_step = std::numeric_limits<double>::infinity();
  double blow_up_threshold = tol::blow_up;
};

namespace detail {

inline void validate_config(const IntegratorConfig& cfg) {
  if (!(cfg.abs_tol > 0.0 && cfg.abs_tol < 1.0) ||
      !(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0))
    throw RiccatiError("integrator tolerances must lie in (0, 1)");
  if (!(cfg.max_step > 0.0))
    throw RiccatiError("integrator max_step must be positive");
  if (!(cfg.blow_up_threshold > 1.0))
    throw RiccatiError("integrator blow_up_threshold must exceed 1");
}

struct OdeOutcome {
  std::vector<std::pair<double, Vec>> samples;
  bool truncated = false;
  double end_time = 0.0;
};

/// Dormand-Prince 5(4) with PI step-size control. Steps are clipped so the
/// integrator lands exactly on each requested sample time; stop(y) is tested
/// on every accepted state and truncates the run before emitting the sample.
template <class Rhs, class Stop>
OdeOutcome integrate_dopri5(Rhs&& rhs, const Vec& y0,
                            const std::vector<double>& sample_times,
                            const IntegratorConfig& cfg, Stop&& stop) {
  validate_config(cfg);
  OdeOutcome out;

  double t = 0.0;
  Vec y = y0;
  std::size_t si = 0;
  while (si < sample_times.size() && sample_times[si] <= 0.0) {
    out.samples.emplace_back(sample_times[si], y);
    ++si;
  }
  if (si == sample_times.size()) {
    out.end_time = t;
    return out;
  }

  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                   a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - 0.75 * beta;
  constexpr double facmin = 0.2, facmax = 10.0;

  Vec k1 = rhs(t, y);
  double facold = 1e-4;
  double h_prop = std::min(cfg.max_step, std::min(0.01, sample_times[si] - t));

  while (si < sample_times.size()) {
    const double t_target = sample_times[si];
    bool clipped = false;
    double h = h_prop;
    if (t + h >= t_target - 1e-14 * std::max(1.0, std::abs(t_target))) {
      h = t_target - t;
      clipped = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      out.truncated = true;
      out.end_time = t;
      return out;
    }

    const Vec k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 =
        rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = rhs(
        t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y_new =
        y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const Vec k7 = rhs(t + h, y_new);
    const Vec err_vec =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err_sq = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const double scale =
          cfg.abs_tol +
          cfg.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      const double r = err_vec(i) / scale;
      err_sq += r * r;
    }
    const double err = std::sqrt(err_sq / static_cast<double>(y.size()));
    const double fac11 = std::pow(std::max(err, 0.0), expo1);

    if (err <= 1.0) {
      t = clipped ? t_target : t + h;
      y = y_new;
      k1 = k7;
      if (stop(y)) {
        out.truncated = true;
        out.end_time = t;
        return out;
      }
      if (clipped) {
        out.samples.emplace_back(t_target, y);
        ++si;
      }
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(1.0 / facmax, std::min(1.0 / facmin, fac / safe));
      const double h_new = h / fac;
      h_prop = std::min(cfg.max_step, clipped ? std::max(h_new, h_prop) : h_new);
      facold = std::max(err, 1e-4);
    } else {
      h_prop = h / std::min(1.0 / facmin, fac11 / safe);
    }
  }
  out.end_time = t;
  return out;
}

inline Index sym_packed_size(Index n) { return n * (n + 1) / 2; }

inline void pack_sym(const Mat& p, Vec& y, Index offset) {
  Index idx = offset;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = i; j < p.cols(); ++j) y(idx++) = p(i, j);
}

inline Mat unpack_sym(const Vec& y, Index offset, Index n) {
  Mat p(n, n);
  Index idx = offset;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      p(i, j) = y(idx);
      p(j, i) = y(idx);
      ++idx;
    }
  return p;
}

}  // namespace detail

/// Reference solution of dP/dt = A'P + PA + P BB' P + C'C on the requested
/// sample times, integrated on the packed upper triangle so symmetry is
/// preserved exactly. Escape (norm blow-up or step underflow) truncates the
/// trace instead of raising.
inline SolveTrace rk45_dre(const LinearSystem& sys, const SymMat& p0,
                           const std::vector<double>& sample_times,
                           const IntegratorConfig& cfg = {}) {
  if (p0.dim() != sys.n())
    throw DimensionError("rk45_dre: P0 dimension does not match the system");
  const Index n = sys.n();
  const Index sz = detail::sym_packed_size(n);

  Vec y0(sz);
  detail::pack_sym(p0.mat(), y0, 0);

  auto rhs = [&sys, n, sz](double, const Vec& y) {
    const Mat p = detail::unpack_sym(y, 0, n);
    const Mat d = sys.A().transpose() * p + p * sys.A() +
                  p * sys.BBt() * p + sys.CtC();
    Vec dy(sz);
    detail::pack_sym(d, dy, 0);
    return dy;
  };
  auto stop = [&cfg, n](const Vec& y) {
    return spectral_norm(detail::unpack_sym(y, 0, n)) > cfg.blow_up_threshold;
  };

  const auto run = detail::integrate_dopri5(rhs, y0, sample_times, cfg, stop);

  SolveTrace trace;
  trace.p0 = p0;
  trace.method = SolveMethod::RK45;
  trace.truncated_at_escape = run.truncated;
  trace.samples.reserve(run.samples.size());
  for (const auto& [t, y] : run.samples)
    trace.samples.emplace_back(t, SymMat(detail::unpack_sym(y, 0, n)));
  return trace;
}

/// Uniform-grid convenience wrapper: samples every 0.05 time units (or finer
/// so at least ten nodes cover the horizon).
inline SolveTrace rk45_dre(const LinearSystem& sys, const SymMat& p0,
                           double t_max, const IntegratorConfig& cfg = {}) {
  if (!(t_max > 0.0)) throw RiccatiError("rk45_dre: t_max must be positive");
  const long long k_max =
      std::max<long long>(10, std::llround(std::ceil(t_max / 0.05 - 1e-9)));
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(k_max));
  for (long long k = 1; k <= k_max; ++k)
    times.push_back(t_max * static_cast<double>(k) / static_cast<double>(k_max));
  return rk45_dre(sys, p0, times, cfg);
}

/// Reference solution of the coupled kernel block system
///   dQ11/dt = A'Q11 + Q11 A + Q11 BB' Q11 + C'C,
///   dQ12/dt = (A + BB'Q11)' Q12,
///   dQ22/dt = Q12' BB' Q12,
/// from Q11 = M, Q12 = -M, Q22 = M. Sample times at or below zero report the
/// initial block exactly.
inline std::vector<std::pair<double, BlockSym2n>> rk45_q_blocks(
    const LinearSystem& sys, const BasisMatrix& basis,
    const std::vector<double>& sample_times, const IntegratorConfig& cfg = {}) {
  if (basis.dim() != sys.n())
    throw DimensionError("rk45_q_blocks: basis dimension does not match the system");
  const Index n = sys.n();
  const Index sym_sz = detail::sym_packed_size(n);
  const Index full_sz = n * n;

  Vec y0(2 * sym_sz + full_sz);
  detail::pack_sym(basis.M.mat(), y0, 0);
  Eigen::Map<Mat>(y0.data() + sym_sz, n, n) = -basis.M.mat();
  detail::pack_sym(basis.M.mat(), y0, sym_sz + full_sz);

  auto rhs = [&sys, n, sym_sz, full_sz](double, const Vec& y) {
    const Mat q11 = detail::unpack_sym(y, 0, n);
    const Mat q12 = Eigen::Map<const Mat>(y.data() + sym_sz, n, n);
    const Mat d11 = sys.A().transpose() * q11 + q11 * sys.A() +
                    q11 * sys.BBt() * q11 + sys.CtC();
    const Mat d12 = (sys.A() + sys.BBt() * q11).transpose() * q12;
    const Mat d22 = q12.transpose() * sys.BBt() * q12;
    Vec dy(2 * sym_sz + full_sz);
    detail::pack_sym(d11, dy, 0);
    Eigen::Map<Mat>(dy.data() + sym_sz, n, n) = d12;
    detail::pack_sym(d22, dy, sym_sz + full_sz);
    return dy;
  };
  auto stop = [&cfg, n](const Vec& y) {
    return spectral_norm(detail::unpack_sym(y, 0, n)) > cfg.blow_up_threshold;
  };

  const auto run = detail::integrate_dopri5(rhs, y0, sample_times, cfg, stop);

  std::vector<std::pair<double, BlockSym2n>> out;
  out.reserve(run.samples.size());
  for (const auto& [t, y] : run.samples) {
    const Mat q12 = Eigen::Map<const Mat>(y.data() + sym_sz, n, n);
    out.emplace_back(t, BlockSym2n(SymMat(detail::unpack_sym(y, 0, n)), q12,
                                   SymMat(detail::unpack_sym(y, sym_sz + full_sz, n))));
  }
  return out;
}

inline std::vector<std::pair<double, BlockSym2n>> rk45_q_blocks(
    const LinearSystem& sys, const BasisMatrix& basis, double t_max,
    const IntegratorConfig& cfg = {}) {
  if (!(t_max > 0.0)) throw RiccatiError("rk45_q_blocks: t_max must be positive");
  std::vector<double> times;
  times.reserve(16);
  for (int k = 0; k <= 16; ++k)
    times.push_back(t_max * static_cast<double>(k) / 16.0);
  return rk45_q_blocks(sys, basis, times, cfg);
}

/// Order-preservation probe: integrates both initial conditions and reports
/// whether P_low(t) - P_high(t) stays negative semidefinite (within the
/// definiteness band) on the common existence interval. Requires the initial
/// difference itself to be negative semidefinite.
inline bool monotonicity_check(const LinearSystem& sys, const SymMat& p0_low,
                               const SymMat& p0_high, double t_max,
                               const IntegratorConfig& cfg = {}) {
  if (p0_low.dim() != p0_high.dim() || p0_low.dim() != sys.n())
    throw DimensionError("monotonicity_check: dimensions do not match");
  const auto rep0 =
      classify_definiteness(SymMat(p0_low.mat() - p0_high.mat()));
  if (rep0.max_eig > rep0.band)
    throw DomainViolation(
        "monotonicity_check: P0_low - P0_high is not negative semidefinite");

  constexpr int n_samples = 50;
  std::vector<double> times;
  times.reserve(n_samples);
  for (int k = 1; k <= n_samples; ++k)
    times.push_back(t_max * static_cast<double>(k) / n_samples);

  const SolveTrace low = rk45_dre(sys, p0_low, times, cfg);
  const SolveTrace high = rk45_dre(sys, p0_high, times, cfg);
  const std::size_t common = std::min(low.samples.size(), high.samples.size());
  for (std::size_t i = 0; i < common; ++i) {
    const auto rep = classify_definiteness(
        SymMat(low.samples[i].second.mat() - high.samples[i].second.mat()));
    if (rep.max_eig > rep.band) return false;
  }
  return true;
}

}  // namespace riccati
