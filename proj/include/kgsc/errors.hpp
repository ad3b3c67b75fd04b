#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgsc {

/// Domain-level failure: invalid data, dimension mismatch, unknown label.
/// The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input content. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& msg) : Error(msg) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Unusable environment: missing files, unwritable paths. The CLI maps these
/// to exit code 2, same as flag-parsing errors.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kgsc
