#pragma once

#include <stdexcept>
#include <string>

namespace paintlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent tensor extents. The message names the offending dimension.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (bad sizes, missing files, unknown names).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or forbidden numerical conditions during a run.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace paintlab
