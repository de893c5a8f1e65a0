#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bess {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside an operation's domain (negative quantity, unknown product, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `row()` is the 1-based data row (0 when not row-specific).
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t row = 0)
      : Error(row > 0 ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Structurally valid data that violates a market invariant (crossed book, gate closure, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An FCR commitment whose state-of-charge envelope is empty for the given battery.
class InfeasibleStrategyError : public Error {
 public:
  using Error::Error;
};

/// Required series missing (clearing price, DAA hour, forecast, frequency sample, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Model applied to features built with a different schema.
class SchemaMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace bess
