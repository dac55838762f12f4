#pragma once

#include <stdexcept>
#include <string>

namespace idslab {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration or usage: malformed spec files, out-of-range parameters,
// violated preconditions. The CLI maps these to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// A numeric value left its admissible domain (non-positive coefficient,
// non-finite sample, evaluation outside a curve's range).
struct DomainError : Error {
  using Error::Error;
};

// Evaluation above the tabulated range of a curve.
struct RangeError : DomainError {
  using DomainError::DomainError;
};

// Operator assembly rejected its input (wrong field kind for the requested
// boundary condition, incompatible shapes).
struct AssemblyError : Error {
  using Error::Error;
};

// A solver failed or a hard resource cap was exceeded.
struct ComputeError : Error {
  using Error::Error;
};

}  // namespace idslab
