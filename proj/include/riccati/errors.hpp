#pragma once

#include <stdexcept>
#include <string>

namespace riccati {

/// Base class of every error thrown by this library.
struct RiccatiError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operands whose shapes do not line up.
struct DimensionError : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// Matrix inversion requested on a (numerically) singular matrix.
struct SingularMatrix : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// Square root requested on a matrix with a negative eigenvalue.
struct NotPSD : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// The algebraic Riccati equation admits no stabilizing solution.
struct NoStabilizingSolution : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// A user-supplied basis matrix fails invertibility or the ordering bound.
struct InvalidUserBasis : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// The pair (A, B) fails the controllability rank test.
struct NotControllable : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// Input lies outside the domain of a duality transform.
struct DomainViolation : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// A block that must be symmetric came out asymmetric beyond tolerance.
struct SymmetryViolation : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// The semigroup product was fed blocks violating the cone condition.
struct NotInCone : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// Initial condition lies outside the admissible class for the table's basis.
struct InitOutOfClass : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// The symplectic solution hit a singular X block at the requested time.
struct EscapeEncountered : RiccatiError {
  EscapeEncountered(const std::string& msg, double time)
      : RiccatiError(msg), t(time) {}
  double t;
};

/// Malformed config, table, or initial-condition text.
struct ParseError : RiccatiError {
  using RiccatiError::RiccatiError;
};

/// Filesystem failure while reading or writing an artifact.
struct IoError : RiccatiError {
  using RiccatiError::RiccatiError;
};

}  // namespace riccati
