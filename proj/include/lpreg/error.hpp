#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lpreg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree (e.g. x has the wrong length for A).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value violates a documented precondition. `field` names the offending
// input when there is one.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed input file. `line` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(line == 0 ? message
                        : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// An inner iterative routine ran out of budget before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace lpreg
