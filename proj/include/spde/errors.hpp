#pragma once

#include <stdexcept>
#include <string>

namespace spde {

// Error taxonomy. The CLI maps these onto exit codes:
// ValidationError -> 2, NumericalError -> 3, IoError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

struct DimensionMismatch : ValidationError {
  using ValidationError::ValidationError;
};
struct IndexOutOfRange : ValidationError {
  using ValidationError::ValidationError;
};
struct EmptyData : ValidationError {
  using ValidationError::ValidationError;
};
struct EmptyChain : ValidationError {
  using ValidationError::ValidationError;
};
struct ZeroReference : ValidationError {
  using ValidationError::ValidationError;
};
struct MissingParameterField : ValidationError {
  using ValidationError::ValidationError;
};
struct MissingArtifacts : IoError {
  using IoError::IoError;
};

struct NotFactorizable : NumericalError {
  using NumericalError::NumericalError;
};
struct NoConvergence : NumericalError {
  using NumericalError::NumericalError;
};
struct DegenerateComponent : NumericalError {
  using NumericalError::NumericalError;
};
struct NonFiniteState : NumericalError {
  using NumericalError::NumericalError;
};
struct SolverFailed : NumericalError {
  using NumericalError::NumericalError;
};
struct SingularSystem : SolverFailed {
  using SolverFailed::SolverFailed;
};
struct NonPositiveCoefficient : ValidationError {
  using ValidationError::ValidationError;
};
struct NewtonDiverged : SolverFailed {
  using SolverFailed::SolverFailed;
};

}  // namespace spde
