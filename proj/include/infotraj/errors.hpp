#pragma once

#include <stdexcept>
#include <string>

namespace infotraj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (non-square vec length, mismatched p).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization failed on a matrix that must be SPD.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// Degenerate sensing geometry, e.g. receiver and emitter coincide.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Bad caller input: control outside U, query outside the grid, etc.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid scenario or solver configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared while time marching.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace infotraj
