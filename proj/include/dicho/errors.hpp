#pragma once

#include <stdexcept>
#include <string>

namespace dicho {

/// Base class for all library errors. Everything thrown by dicho derives
/// from this, so callers (in particular the CLI) can map failures to exit
/// codes without enumerating every type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct SingularMatrix : Error {
  long index;
  explicit SingularMatrix(long k, const std::string& what)
      : Error(what), index(k) {}
};

struct IndexOutOfWindow : Error {
  using Error::Error;
};

struct WindowMismatch : Error {
  using Error::Error;
};

struct ZeroNotInWindow : Error {
  using Error::Error;
};

struct F0NotZero : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

// Splitting estimation could not separate contracted from expanded
// directions (ambiguous singular-value split, or S + U fails to span).
struct NoGapDetected : Error {
  using Error::Error;
};

// eq. psi0+ - psi0- is not representable as phi0- - phi0+ over the
// decaying subspaces: the two half-line dichotomies are not transverse.
struct GluingNotSolvable : Error {
  double relative_residual;
  GluingNotSolvable(double rel, const std::string& what)
      : Error(what), relative_residual(rel) {}
};

struct EtaNotUnstable : Error {
  using Error::Error;
};

struct NotContraction : Error {
  using Error::Error;
};

struct DomainExit : Error {
  using Error::Error;
};

struct MaxIterExceeded : Error {
  using Error::Error;
};

struct VerificationFailed : Error {
  using Error::Error;
};

// CLI configuration problems (missing/unknown keys, bad files).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dicho
