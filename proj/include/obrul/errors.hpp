#pragma once

#include <stdexcept>
#include <string>

namespace obrul {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed text input (bad cell, wrong column count); message carries file and line.
struct ParseError : Error {
  using Error::Error;
};

/// Shape or size violations: wrong sample counts, mismatched dimensions.
struct StructuralError : Error {
  using Error::Error;
};

/// No usable input found where data was required.
struct NoDataError : Error {
  using Error::Error;
};

/// Invalid configuration value or file.
struct ConfigError : Error {
  using Error::Error;
};

/// Invalid argument to an operation (empty batch, out-of-range label, ...).
struct ArgumentError : Error {
  using Error::Error;
};

/// Frequency or index outside the supported range of the receiver.
struct RangeError : Error {
  using Error::Error;
};

/// A pipeline stage is missing an upstream artifact.
struct DependencyError : Error {
  using Error::Error;
};

/// Training produced a non-finite loss.
struct DivergenceError : Error {
  using Error::Error;
};

/// Filesystem-level failure.
struct IoError : Error {
  using Error::Error;
};

struct ModelIoError : Error {
  using Error::Error;
};
struct ModelVersionError : ModelIoError {
  using ModelIoError::ModelIoError;
};
struct ModelChecksumError : ModelIoError {
  using ModelIoError::ModelIoError;
};
struct ModelTruncatedError : ModelIoError {
  using ModelIoError::ModelIoError;
};
struct ModelKindError : ModelIoError {
  using ModelIoError::ModelIoError;
};

}  // namespace obrul
