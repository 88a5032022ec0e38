#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedrank {

// Base for every error raised by the library. The CLI maps subclasses onto
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line),
        detail_(what) {}

  std::size_t line() const { return line_; }
  // The message without the line prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// Binary file that fails magic/version/length/checksum validation.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a semantic constraint (unknown id,
// dimension mismatch, conflicting mapping, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or undefined numeric quantities.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Misuse of an API (backward twice, shape mismatch, bad argument).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedrank
