#pragma once

#include <stdexcept>
#include <string>

namespace cpwlnet {

/// Base class for every error raised by the library. `exit_code()` is the
/// process status the command-line front end reports for it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad arguments or violated preconditions.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text (CSV rows, JSON documents).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally wrong input file (missing or inconsistent header).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Data that parsed but violates an invariant (non-finite values, N = 0).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during numerical work.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between a network and its input.
class ShapeError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// A max-min representation disagrees with the region pieces at some sample.
class ConsistencyError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// A sample has zero activation margin, so no perturbation radius exists.
class MarginError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// Invalid build configuration (for instance a positivity shift that is too small).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Requested construction is outside what the builder supports.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpwlnet
