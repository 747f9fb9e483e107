#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

/// Base class for all solver and validation failures raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Point lies outside the tubular neighbourhood where boundary projection is defined.
struct TubeExceeded : Error {
  using Error::Error;
};

/// Iterative root finding or fixed-point iteration failed to reach tolerance.
struct NonConvergence : Error {
  using Error::Error;
};

/// Two measures live on different grids where a common grid is required.
struct GridMismatch : Error {
  using Error::Error;
};

/// Time step and grid spacing are incompatible (no admissible transition exists).
struct IncompatibleResolution : Error {
  using Error::Error;
};

/// Value iteration hit the iteration cap before meeting the residual tolerance.
struct NoConvergence : Error {
  using Error::Error;
};

/// Requested a boundary-only quantity at an interior node or vice versa.
struct BoundaryNode : Error {
  using Error::Error;
};

/// Requested a one-sided boundary quantity at a box corner where the normal is ambiguous.
struct CornerNode : Error {
  using Error::Error;
};

/// The potential keeps decreasing outside the domain; the static problem has no
/// interior minimiser to anchor the minimising measure.
struct ConstraintQualificationFailed : Error {
  using Error::Error;
};

/// A norm regime assumption required by a bound check does not hold.
struct RegimeViolation : Error {
  using Error::Error;
};

/// Configuration file is malformed, has unknown fields, or misses required ones.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace mfg
