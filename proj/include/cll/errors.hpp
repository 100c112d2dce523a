#pragma once

#include <stdexcept>
#include <string>

namespace cll {

/// Input violates a domain invariant (range, coverage, shape of a signal).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two objects that must agree on size or indexing do not.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Unreadable or malformed file content. `line` is 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cll
