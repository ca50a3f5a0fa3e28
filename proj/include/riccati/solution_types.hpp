#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "matrix_ops.hpp"

namespace riccati {

enum class SolveMethod { MaxPlus, Symplectic, RK45 };

enum class EscapeVerdict {
  NoEscapeWithinHorizon,
  EscapeInBracket,
  IndeterminateBoundary,
};

/// Escape analysis for one initial condition: the sampled indicator trace
/// (where the method exposes one) and the bracketed escape interval
/// (t_lo, t_hi] when escape was detected.
struct EscapeReport {
  SymMat p0;
  std::vector<std::pair<double, double>> trace;
  std::optional<std::pair<double, double>> escape_bracket;
  EscapeVerdict verdict = EscapeVerdict::NoEscapeWithinHorizon;
};

/// Sampled solution path of one method. truncated_at_escape marks a path cut
/// short before the requested horizon.
struct SolveTrace {
  SymMat p0;
  std::vector<std::pair<double, SymMat>> samples;
  SolveMethod method = SolveMethod::MaxPlus;
  bool truncated_at_escape = false;
};

inline const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::MaxPlus: return "maxplus";
    case SolveMethod::Symplectic: return "symplectic";
    case SolveMethod::RK45: return "rk45";
  }
  return "unknown";
}

inline const char* to_string(EscapeVerdict v) {
  switch (v) {
    case EscapeVerdict::NoEscapeWithinHorizon: return "no_escape_within_horizon";
    case EscapeVerdict::EscapeInBracket: return "escape_in_bracket";
    case EscapeVerdict::IndeterminateBoundary: return "indeterminate_boundary";
  }
  return "unknown";
}

}  // namespace riccati
