#pragma once

#include <stdexcept>
#include <string>

namespace pnr {

// Error taxonomy mirrored by CLI exit codes: config=2, numeric=3, io=4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DimError : ConfigError {
  using ConfigError::ConfigError;
};

struct NumericError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Checkpoint-specific failures, each distinct so callers can tell a wrong
// file apart from a damaged one.
struct FormatError : IoError {
  using IoError::IoError;
};

struct VersionError : IoError {
  using IoError::IoError;
};

struct PayloadError : IoError {
  using IoError::IoError;
};

}  // namespace pnr
