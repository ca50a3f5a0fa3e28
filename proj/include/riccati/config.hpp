#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "matrix_ops.hpp"
#include "reference.hpp"
#include "semigroup.hpp"
#include "system.hpp"

namespace riccati {

/// Parsed problem description: the system triple (square-root factors already
/// resolved), basis request, grid, named initial conditions, and options.
struct ProblemConfig {
  Mat A, B, C;
  std::optional<SymMat> basis_m;
  double basis_margin = 1.0;
  double delta = 0.0;
  long long K = 0;
  std::vector<std::pair<std::string, SymMat>> initial_conditions;
  BuildStrategy strategy = BuildStrategy::Linear;
  bool refine_escape = false;
  IntegratorConfig tolerances;
};

namespace detail {

inline Mat parse_matrix(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ParseError(where + ": expected a non-empty array of rows");
  if (!j[0].is_array() || j[0].empty())
    throw ParseError(where + ": rows must be non-empty arrays");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols)
      throw ParseError(where + ": rows have inconsistent lengths");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw ParseError(where + ": entries must be numbers");
      m(static_cast<Index>(r), static_cast<Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

inline SymMat parse_sym_matrix(const nlohmann::json& j, const std::string& where) {
  const Mat m = parse_matrix(j, where);
  if (m.rows() != m.cols()) throw ParseError(where + ": matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol::sym_check * scale)
    throw ParseError(where + ": matrix is not symmetric");
  return SymMat(m);
}

/// B and C may be given directly or as {"sqrt_of": S} with S symmetric
/// positive semidefinite; the stored factor is then sqrtm(S).
inline Mat parse_factor(const nlohmann::json& j, const std::string& where) {
  if (j.is_object()) {
    if (j.size() != 1 || !j.contains("sqrt_of"))
      throw ParseError(where + ": expected a matrix or {\"sqrt_of\": matrix}");
    return sqrtm_spd(parse_sym_matrix(j.at("sqrt_of"), where + ".sqrt_of")).mat();
  }
  return parse_matrix(j, where);
}

}  // namespace detail

inline ProblemConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config is not well-formed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");

  ProblemConfig cfg;
  try {
    if (!j.contains("system") || !j["system"].is_object())
      throw ParseError("config: missing \"system\" object");
    const auto& sys = j["system"];
    if (!sys.contains("A") || !sys.contains("B") || !sys.contains("C"))
      throw ParseError("config: system needs A, B and C");
    cfg.A = detail::parse_matrix(sys["A"], "system.A");
    cfg.B = detail::parse_factor(sys["B"], "system.B");
    cfg.C = detail::parse_factor(sys["C"], "system.C");

    if (j.contains("basis")) {
      const auto& basis = j["basis"];
      if (!basis.is_object() ||
          (basis.contains("M") == basis.contains("auto")))
        throw ParseError("config: basis must be {\"M\": matrix} or {\"auto\": {\"margin\": r}}");
      if (basis.contains("M")) {
        cfg.basis_m = detail::parse_sym_matrix(basis["M"], "basis.M");
      } else {
        const auto& au = basis["auto"];
        if (!au.is_object()) throw ParseError("config: basis.auto must be an object");
        if (au.contains("margin")) {
          if (!au["margin"].is_number() || au["margin"].get<double>() <= 0.0)
            throw ParseError("config: basis.auto.margin must be a positive number");
          cfg.basis_margin = au["margin"].get<double>();
        }
      }
    }

    if (!j.contains("grid") || !j["grid"].is_object())
      throw ParseError("config: missing \"grid\" object");
    const auto& grid = j["grid"];
    if (!grid.contains("delta") || !grid["delta"].is_number() ||
        grid["delta"].get<double>() <= 0.0)
      throw ParseError("config: grid.delta must be a positive number");
    if (!grid.contains("K") || !grid["K"].is_number_integer() ||
        grid["K"].get<long long>() < 1)
      throw ParseError("config: grid.K must be a positive integer");
    cfg.delta = grid["delta"].get<double>();
    cfg.K = grid["K"].get<long long>();

    if (j.contains("initial_conditions")) {
      const auto& ics = j["initial_conditions"];
      if (!ics.is_object())
        throw ParseError("config: initial_conditions must map names to matrices");
      for (auto it = ics.begin(); it != ics.end(); ++it)
        cfg.initial_conditions.emplace_back(
            it.key(),
            detail::parse_sym_matrix(it.value(), "initial_conditions." + it.key()));
    }

    if (j.contains("options")) {
      const auto& opt = j["options"];
      if (!opt.is_object()) throw ParseError("config: options must be an object");
      if (opt.contains("strategy")) {
        const std::string s = opt["strategy"].is_string()
                                  ? opt["strategy"].get<std::string>()
                                  : std::string();
        if (s == "linear")
          cfg.strategy = BuildStrategy::Linear;
        else if (s == "doubling")
          cfg.strategy = BuildStrategy::Doubling;
        else
          throw ParseError("config: options.strategy must be \"linear\" or \"doubling\"");
      }
      if (opt.contains("refine_escape")) {
        if (!opt["refine_escape"].is_boolean())
          throw ParseError("config: options.refine_escape must be a boolean");
        cfg.refine_escape = opt["refine_escape"].get<bool>();
      }
      if (opt.contains("tolerances")) {
        const auto& tols = opt["tolerances"];
        if (!tols.is_object())
          throw ParseError("config: options.tolerances must be an object");
        auto num = [&tols](const char* key, double& slot) {
          if (!tols.contains(key)) return;
          if (!tols[key].is_number())
            throw ParseError(std::string("config: options.tolerances.") + key +
                             " must be a number");
          slot = tols[key].get<double>();
        };
        num("abs_tol", cfg.tolerances.abs_tol);
        num("rel_tol", cfg.tolerances.rel_tol);
        num("max_step", cfg.tolerances.max_step);
        num("blow_up_threshold", cfg.tolerances.blow_up_threshold);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: malformed field: ") + e.what());
  }
  return cfg;
}

inline ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

inline LinearSystem make_system(const ProblemConfig& cfg) {
  return LinearSystem(cfg.A, cfg.B, cfg.C);
}

inline BasisMatrix make_basis(const ProblemConfig& cfg, const LinearSystem& sys) {
  if (cfg.basis_m) return select_basis(sys, *cfg.basis_m);
  return select_basis(sys, cfg.basis_margin);
}

/// Look up a named initial condition, or parse an inline JSON matrix when the
/// argument starts with '['.
inline SymMat resolve_p0(const ProblemConfig& cfg, const std::string& arg) {
  if (!arg.empty() && arg[0] == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(arg);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("inline P0 is not well-formed JSON: ") + e.what());
    }
    return detail::parse_sym_matrix(j, "inline P0");
  }
  for (const auto& [name, m] : cfg.initial_conditions)
    if (name == arg) return m;
  throw ParseError("no initial condition named '" + arg + "' in the config");
}

}  // namespace riccati
