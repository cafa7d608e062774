#pragma once

#include <stdexcept>
#include <string>

namespace epid {

// Base for every error raised by the library. The CLI maps ValidationError
// subclasses to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input supplied by the caller: invalid arguments, configs, or data that
// violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class GeometryError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data (length mismatch, unknown enum, version mismatch).
class FormatError : public Error {
 public:
  using Error::Error;
};

class DisplacementOverflow : public Error {
 public:
  using Error::Error;
};

class IllPosedError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace epid
