#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ltn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf appeared, a norm collapsed, or a loss diverged.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Gram-Schmidt hit a residual below the degeneracy threshold.
class DegenerateBasisError : public NumericalError {
 public:
  DegenerateBasisError(std::size_t column, double residual)
      : NumericalError("degenerate basis: column " + std::to_string(column) +
                       " has residual norm " + std::to_string(residual)),
        column_(column),
        residual_(residual) {}

  std::size_t column() const noexcept { return column_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t column_;
  double residual_;
};

/// Invalid run configuration. `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Malformed or incompatible binary file (checkpoint, stream export).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ltn
