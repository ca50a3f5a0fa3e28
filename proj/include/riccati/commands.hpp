#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "dre_solver.hpp"
#include "errors.hpp"
#include "semigroup.hpp"
#include "symplectic.hpp"
#include "system.hpp"
#include "validate.hpp"

namespace riccati {

/// Verbose progress logging on stderr, switched by the RICCATI_LOG
/// environment variable (any value except empty or "0").
inline bool log_enabled() {
  const char* v = std::getenv("RICCATI_LOG");
  return v != nullptr && *v != '\0' && std::string_view(v) != "0";
}

inline void log_line(const std::string& msg) {
  if (log_enabled()) std::cerr << "[riccati] " << msg << "\n";
}

namespace detail {

/// Human-readable matrix block at 4 significant figures.
inline void print_matrix(std::ostream& out, const std::string& name,
                         const Mat& m) {
  out << name << " =\n";
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    out << "  [";
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%11.4g", m(i, j));
      out << buf;
    }
    out << " ]\n";
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

/// Map library failures onto the CLI exit contract: 0 success,
/// 1 validation or model-class failure, 2 parse or I/O failure.
template <class F>
int run_guarded(F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const RiccatiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

/// Build the semigroup table from a config and persist it: validates the
/// model requirements (controllability, basis), prints M, M0 and the one-step
/// kernel, and writes the table file.
inline int cmd_build(const ProblemConfig& cfg, const std::string& out_path) {
  return run_guarded([&]() {
    const LinearSystem sys = make_system(cfg);
    log_line("system loaded: n=" + std::to_string(sys.n()));
    if (!is_controllable(sys))
      throw NotControllable(
          "the pair (A, B) fails the controllability rank test");
    const BasisMatrix basis = make_basis(cfg, sys);
    log_line("basis selected");

    const SemigroupTable table =
        build_table(sys, basis, cfg.delta, cfg.K, cfg.strategy);
    log_line("table built: K=" + std::to_string(cfg.K));
    write_table(out_path, table);

    detail::print_matrix(std::cout, "M", basis.M.mat());
    if (basis.M0) detail::print_matrix(std::cout, "M0", basis.M0->mat());
    detail::print_matrix(std::cout, "Lambda_delta", table.at(1).assemble());
    std::cout << "table: " << out_path << " (K=" << table.K
              << ", delta=" << format_double(table.delta) << ")\n";
    return 0;
  });
}

/// Solve from a persisted table for one initial condition and write the trace
/// CSV. Named initial conditions and bracket refinement need the config that
/// produced the table.
inline int cmd_solve(const std::string& table_path, const std::string& p0_arg,
                     const std::string& out_csv,
                     const std::optional<ProblemConfig>& cfg = std::nullopt,
                     bool refine_escape = false) {
  return run_guarded([&]() {
    const SemigroupTable table = read_table(table_path);
    log_line("table loaded: K=" + std::to_string(table.K));

    SymMat p0;
    if (!p0_arg.empty() && p0_arg[0] == '[') {
      ProblemConfig dummy;
      p0 = resolve_p0(dummy, p0_arg);
    } else {
      if (!cfg)
        throw ParseError("a named initial condition needs --config");
      p0 = resolve_p0(*cfg, p0_arg);
    }

    const MaxPlusSolution sol = solve_from_table(table, p0);
    log_line("solved: " + std::to_string(sol.trace.samples.size()) + " samples");

    auto out = detail::open_out(out_csv);
    write_trace_csv(out, sol.trace, sol.escape.escape_bracket);
    if (refine_escape && sol.escape.escape_bracket) {
      if (!cfg)
        throw ParseError("--refine-escape needs --config to rebuild kernels");
      const LinearSystem sys = make_system(*cfg);
      const BasisMatrix basis = make_basis(*cfg, sys);
      const auto refined = refine_escape_bracket(sys, basis, p0,
                                                 *sol.escape.escape_bracket);
      out << "# escape_bracket_refined," << format_bracket(refined) << "\n";
    }
    if (!out) throw IoError("write to '" + out_csv + "' failed");

    if (sol.escape.escape_bracket)
      std::cout << "escape bracket " << format_bracket(*sol.escape.escape_bracket)
                << " (" << to_string(sol.escape.verdict) << ")\n";
    else
      std::cout << "no escape within horizon (" << sol.trace.samples.size()
                << " samples)\n";
    return 0;
  });
}

/// Run all three methods on the configured grid and write the error CSV.
inline int cmd_compare(const ProblemConfig& cfg, const std::string& p0_arg,
                       const std::string& out_csv) {
  return run_guarded([&]() {
    const LinearSystem sys = make_system(cfg);
    if (!is_controllable(sys))
      throw NotControllable(
          "the pair (A, B) fails the controllability rank test");
    const BasisMatrix basis = make_basis(cfg, sys);
    const SymMat p0 = resolve_p0(cfg, p0_arg);
    const double t_max = grid_time(cfg.K, cfg.delta);

    const MethodComparison cmp = compare_methods(
        sys, basis, p0, t_max, cfg.delta, cfg.tolerances, cfg.strategy);
    auto out = detail::open_out(out_csv);
    write_compare_csv(out, cmp);
    if (!out) throw IoError("write to '" + out_csv + "' failed");

    std::cout << "compared " << cmp.times.size() << " grid times\n";
    return 0;
  });
}

/// Run the property suite and print one status line per check.
inline int cmd_validate(const ProblemConfig& cfg) {
  return run_guarded([&]() {
    const auto results = run_validation(cfg);
    bool all_pass = true;
    for (const auto& r : results) {
      std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name
                << "  residual=" << format_double(r.residual);
      if (!r.note.empty()) std::cout << "  (" << r.note << ")";
      std::cout << "\n";
      all_pass = all_pass && r.pass;
    }
    std::cout << (all_pass ? "all checks passed" : "some checks FAILED")
              << " (" << results.size() << " checks)\n";
    return all_pass ? 0 : 1;
  });
}

}  // namespace riccati
