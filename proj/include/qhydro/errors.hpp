#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qhydro {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Unparsable field; carries the 1-based data row number (header excluded).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Date gap or duplicate; carries the offending ISO date.
class ContinuityError : public Error {
 public:
  ContinuityError(const std::string& what, std::string date)
      : Error(what + ": " + date), date_(std::move(date)) {}
  const std::string& date() const noexcept { return date_; }

 private:
  std::string date_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public DomainError {
 public:
  using DomainError::DomainError;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class EmptyScoreError : public Error {
 public:
  using Error::Error;
};

class DegenerateBenchmarkError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ScreeningFailedError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace qhydro
