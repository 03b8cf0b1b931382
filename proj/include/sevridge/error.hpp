#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sevridge {

// Bad arguments, broken preconditions, inconsistent shapes.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Value outside its documented domain (age, noise draw, ...).
class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// r2 and normalized MSE are undefined for a constant target vector.
class DegenerateTargetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Cholesky breakdown while factoring the posterior precision matrix.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(std::size_t pivot, double value);

  std::size_t pivot() const { return pivot_; }
  double value() const { return value_; }

 private:
  std::size_t pivot_;
  double value_;
};

// Malformed content in a text file; carries 1-based line and column.
class ParseError : public ValidationError {
 public:
  ParseError(std::string file, std::size_t line, std::size_t column,
             const std::string& what);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

// Could not open, read, write or rename a file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sevridge
