#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix_ops.hpp"
#include "reference.hpp"
#include "semigroup.hpp"
#include "solution_types.hpp"
#include "symplectic.hpp"
#include "system.hpp"
#include "textio.hpp"

namespace riccati {

namespace detail {

inline const BasisMatrix& require_basis(const SemigroupTable& table,
                                        const char* what) {
  if (!table.basis)
    throw RiccatiError(std::string(what) +
                       ": table carries no basis matrix; rebuild it or load a "
                       "file with a basis record");
  return *table.basis;
}

}  // namespace detail

struct MaxPlusSolution {
  SolveTrace trace;
  EscapeReport escape;
};

/// Evaluate the particular solution along the table grid:
///   P_{k delta} = Lambda11 - Lambda12 (P0 + Lambda22)^{-1} Lambda12'
/// while P0 + Lambda22 stays negative definite; the first grid node failing
/// the test closes the trace with escape bracket ((k-1)delta, k delta].
/// P0 must satisfy P0 - M positive definite.
inline MaxPlusSolution solve_from_table(const SemigroupTable& table,
                                        const SymMat& p0) {
  const BasisMatrix& basis = detail::require_basis(table, "solve_from_table");
  if (p0.dim() != basis.dim())
    throw DimensionError("solve_from_table: P0 dimension does not match the table");

  const auto rep0 =
      classify_definiteness(SymMat(p0.mat() - basis.M.mat()));
  if (rep0.classification != Definiteness::PositiveDefinite)
    throw InitOutOfClass(
        "P0 - M must be positive definite; its smallest eigenvalue is " +
        std::to_string(rep0.min_eig));

  MaxPlusSolution out;
  out.trace.p0 = p0;
  out.trace.method = SolveMethod::MaxPlus;
  out.escape.p0 = p0;

  for (long long k = 1; k <= table.K; ++k) {
    const BlockSym2n& lam = table.at(k);
    const double t = grid_time(k, table.delta);
    const SymMat pencil(p0.mat() + lam.b22().mat());
    const auto rep = classify_definiteness(pencil);
    out.escape.trace.emplace_back(t, rep.max_eig);
    if (rep.classification == Definiteness::NegativeDefinite) {
      const Mat v = inverse(pencil.mat());
      const Mat& l12 = lam.b12();
      out.trace.samples.emplace_back(
          t, symmetrize(lam.b11().mat() - l12 * v * l12.transpose()));
    } else {
      out.escape.escape_bracket = {grid_time(k - 1, table.delta), t};
      out.escape.verdict = rep.max_eig > rep.band
                               ? EscapeVerdict::EscapeInBracket
                               : EscapeVerdict::IndeterminateBoundary;
      out.trace.truncated_at_escape = true;
      return out;
    }
  }
  out.escape.verdict = EscapeVerdict::NoEscapeWithinHorizon;
  return out;
}

/// Full indicator trace (t, max_eig(P0 + Lambda_t^22)) over the whole grid,
/// regardless of crossings, plus the bracket of the first zero crossing.
/// P0 only needs to be symmetric of matching dimension.
inline EscapeReport sigma_max_trace(const SemigroupTable& table,
                                    const SymMat& p0) {
  if (!table.entries.empty() && p0.dim() != table.entries[0].n())
    throw DimensionError("sigma_max_trace: P0 dimension does not match the table");

  EscapeReport report;
  report.p0 = p0;
  bool crossed = false;
  std::optional<std::pair<double, double>> boundary;
  for (long long k = 1; k <= table.K; ++k) {
    const double t = grid_time(k, table.delta);
    const auto rep =
        classify_definiteness(SymMat(p0.mat() + table.at(k).b22().mat()));
    report.trace.emplace_back(t, rep.max_eig);
    if (!crossed) {
      const double t_prev = grid_time(k - 1, table.delta);
      if (rep.max_eig > rep.band) {
        report.escape_bracket = {t_prev, t};
        report.verdict = EscapeVerdict::EscapeInBracket;
        crossed = true;
      } else if (rep.max_eig >= -rep.band && !boundary) {
        boundary = {{t_prev, t}};
      }
    }
  }
  if (!crossed && boundary) {
    report.escape_bracket = boundary;
    report.verdict = EscapeVerdict::IndeterminateBoundary;
  }
  return report;
}

struct EscapeProbe {
  double t = 0.0;
  double sigma_max = 0.0;
  EscapeVerdict verdict = EscapeVerdict::NoEscapeWithinHorizon;
  std::optional<std::pair<double, double>> bracket;
};

/// Escape test at one grid time: exactly one definiteness test on
/// P0 + Lambda_t^22 and nothing else. Since the indicator is non-decreasing,
/// a negative result clears the whole interval (0, t] and a positive one
/// brackets the escape inside (0, t].
inline EscapeProbe escape_test_at(const SemigroupTable& table,
                                  const SymMat& p0, double t) {
  const long long k = std::llround(t / table.delta);
  if (k < 1 || k > table.K ||
      std::abs(grid_time(k, table.delta) - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw RiccatiError("escape_test_at: t is not a grid node of the table");

  const auto rep =
      classify_definiteness(SymMat(p0.mat() + table.at(k).b22().mat()));
  EscapeProbe probe;
  probe.t = t;
  probe.sigma_max = rep.max_eig;
  if (rep.classification == Definiteness::NegativeDefinite) {
    probe.verdict = EscapeVerdict::NoEscapeWithinHorizon;
  } else if (rep.max_eig > rep.band) {
    probe.verdict = EscapeVerdict::EscapeInBracket;
    probe.bracket = {{0.0, t}};
  } else {
    probe.verdict = EscapeVerdict::IndeterminateBoundary;
    probe.bracket = {{0.0, t}};
  }
  return probe;
}

/// Bisect an escape bracket by evaluating fresh kernels at midpoint times
/// directly from the flow (no products), preserving the invariant that the
/// indicator is negative at t_lo and crossed by t_hi.
inline std::pair<double, double> refine_escape_bracket(
    const LinearSystem& sys, const BasisMatrix& basis, const SymMat& p0,
    std::pair<double, double> bracket, int rounds = 8) {
  if (!(bracket.first >= 0.0) || !(bracket.second > bracket.first))
    throw RiccatiError("refine_escape_bracket: bracket must satisfy 0 <= t_lo < t_hi");
  for (int i = 0; i < rounds; ++i) {
    const double mid = 0.5 * (bracket.first + bracket.second);
    const BlockSym2n lam = lambda_init(sys, basis, mid);
    const auto rep =
        classify_definiteness(SymMat(p0.mat() + lam.b22().mat()));
    if (rep.classification == Definiteness::NegativeDefinite)
      bracket.first = mid;
    else
      bracket.second = mid;
  }
  return bracket;
}

struct MethodComparison {
  double delta = 0.0;
  std::vector<double> times;
  SolveTrace maxplus;
  SolveTrace symplectic;
  SolveTrace rk45;
  EscapeReport maxplus_escape;
  EscapeReport symplectic_escape;
  std::optional<std::pair<double, double>> rk45_truncation;
  std::optional<std::string> maxplus_error;
  std::vector<std::optional<double>> err_mp_sym;
  std::vector<std::optional<double>> err_mp_rk;
  std::vector<std::optional<double>> err_sym_rk;
};

/// Run the kernel-table solver, the flow solver, and the reference integrator
/// on the shared grid k*delta, k = 1..floor(t_max/delta), and collect per-time
/// pairwise spectral-norm errors. Method failures are recorded in the output
/// rather than raised.
inline MethodComparison compare_methods(const LinearSystem& sys,
                                        const BasisMatrix& basis,
                                        const SymMat& p0, double t_max,
                                        double delta,
                                        const IntegratorConfig& cfg = {},
                                        BuildStrategy strategy = BuildStrategy::Linear) {
  if (!(delta > 0.0) || !(t_max >= delta))
    throw RiccatiError("compare_methods: need 0 < delta <= t_max");
  const long long k_max = static_cast<long long>(std::floor(t_max / delta + 1e-9));

  MethodComparison cmp;
  cmp.delta = delta;
  cmp.times = grid_times(delta, k_max);
  cmp.maxplus.p0 = p0;
  cmp.maxplus.method = SolveMethod::MaxPlus;
  cmp.symplectic.p0 = p0;
  cmp.symplectic.method = SolveMethod::Symplectic;
  cmp.maxplus_escape.p0 = p0;
  cmp.symplectic_escape.p0 = p0;

  const SemigroupTable table = build_table(sys, basis, delta, k_max, strategy);
  try {
    MaxPlusSolution mp = solve_from_table(table, p0);
    cmp.maxplus = std::move(mp.trace);
    cmp.maxplus_escape = std::move(mp.escape);
  } catch (const InitOutOfClass& e) {
    cmp.maxplus_error = e.what();
  }

  const SymplecticFlow flow(sys);
  cmp.symplectic_escape = escape_scan_symplectic(flow, p0, t_max, delta);
  long long sym_stop = k_max;
  if (cmp.symplectic_escape.escape_bracket) {
    sym_stop = std::llround(cmp.symplectic_escape.escape_bracket->first / delta);
    cmp.symplectic.truncated_at_escape = true;
  }
  for (long long k = 1; k <= sym_stop; ++k) {
    const double t = grid_time(k, delta);
    try {
      cmp.symplectic.samples.emplace_back(t, solve_symplectic(flow, p0, t));
    } catch (const EscapeEncountered&) {
      cmp.symplectic.truncated_at_escape = true;
      break;
    }
  }

  cmp.rk45 = rk45_dre(sys, p0, cmp.times, cfg);
  if (cmp.rk45.truncated_at_escape) {
    const std::size_t got = cmp.rk45.samples.size();
    const double last = got == 0 ? 0.0 : cmp.rk45.samples[got - 1].first;
    if (got < cmp.times.size()) cmp.rk45_truncation = {{last, cmp.times[got]}};
  }

  const auto pair_err = [](const SolveTrace& a, const SolveTrace& b,
                           std::size_t k) -> std::optional<double> {
    if (k >= a.samples.size() || k >= b.samples.size()) return std::nullopt;
    return spectral_norm(a.samples[k].second.mat() - b.samples[k].second.mat());
  };
  const std::size_t rows = cmp.times.size();
  cmp.err_mp_sym.resize(rows);
  cmp.err_mp_rk.resize(rows);
  cmp.err_sym_rk.resize(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    cmp.err_mp_sym[k] = pair_err(cmp.maxplus, cmp.symplectic, k);
    cmp.err_mp_rk[k] = pair_err(cmp.maxplus, cmp.rk45, k);
    cmp.err_sym_rk[k] = pair_err(cmp.symplectic, cmp.rk45, k);
  }
  return cmp;
}

inline std::string format_bracket(const std::pair<double, double>& b) {
  return "(" + format_double(b.first) + "," + format_double(b.second) + "]";
}

/// CSV with header t,P_11,...,P_nn (upper triangle, row-major), one row per
/// sample, and a trailing `# escape_bracket,(t_lo,t_hi]` comment when the
/// trace was truncated by escape.
inline void write_trace_csv(
    std::ostream& out, const SolveTrace& trace,
    const std::optional<std::pair<double, double>>& bracket = std::nullopt) {
  const Index n = trace.p0.dim();
  out << 't';
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      out << ",P_" << (i + 1) << (j + 1);
  out << "\n";
  for (const auto& [t, p] : trace.samples) {
    out << format_double(t);
    for (Index i = 0; i < n; ++i)
      for (Index j = i; j < n; ++j) out << ',' << format_double(p(i, j));
    out << "\n";
  }
  if (bracket) out << "# escape_bracket," << format_bracket(*bracket) << "\n";
}

/// CSV with header t,sigma_max plus the escape bracket comment when present.
inline void write_sigma_csv(std::ostream& out, const EscapeReport& report) {
  out << "t,sigma_max\n";
  for (const auto& [t, s] : report.trace)
    out << format_double(t) << ',' << format_double(s) << "\n";
  if (report.escape_bracket)
    out << "# escape_bracket," << format_bracket(*report.escape_bracket) << "\n";
}

/// CSV with header t,err_mp_sym,err_mp_rk,err_sym_rk; cells are empty where a
/// method has no sample. Verdict comment lines follow the data.
inline void write_compare_csv(std::ostream& out, const MethodComparison& cmp) {
  out << "t,err_mp_sym,err_mp_rk,err_sym_rk\n";
  auto cell = [&out](const std::optional<double>& v) {
    out << ',';
    if (v) out << format_double(*v);
  };
  for (std::size_t k = 0; k < cmp.times.size(); ++k) {
    out << format_double(cmp.times[k]);
    cell(cmp.err_mp_sym[k]);
    cell(cmp.err_mp_rk[k]);
    cell(cmp.err_sym_rk[k]);
    out << "\n";
  }
  if (cmp.maxplus_error) {
    out << "# verdict,maxplus,error," << *cmp.maxplus_error << "\n";
  } else {
    out << "# verdict,maxplus," << to_string(cmp.maxplus_escape.verdict);
    if (cmp.maxplus_escape.escape_bracket)
      out << ',' << format_bracket(*cmp.maxplus_escape.escape_bracket);
    out << "\n";
  }
  out << "# verdict,symplectic," << to_string(cmp.symplectic_escape.verdict);
  if (cmp.symplectic_escape.escape_bracket)
    out << ',' << format_bracket(*cmp.symplectic_escape.escape_bracket);
  out << "\n";
  if (cmp.rk45_truncation)
    out << "# verdict,rk45,escape_truncation,"
        << format_bracket(*cmp.rk45_truncation) << "\n";
  else
    out << "# verdict,rk45,no_escape_within_horizon\n";
}

}  // namespace riccati
