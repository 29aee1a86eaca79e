#pragma once

#include <stdexcept>
#include <string>

namespace remask {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration file or invalid parameter combination (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent data (files, graphs, checkpoints).
struct DataError : Error {
  using Error::Error;
};

// Shape/length mismatch between coupled objects.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid argument to an operation (out-of-range scalar, empty input).
struct ParamError : Error {
  using Error::Error;
};

// Non-finite value encountered during numerical work.
struct NumericError : Error {
  using Error::Error;
};

// A pipeline stage failed; message is prefixed with the stage name
// (CLI exit code 3).
struct StageError : Error {
  using Error::Error;
};

}  // namespace remask
