#pragma once

#include <stdexcept>
#include <string>

namespace mea {

/// Invalid data: an invariant of a domain type does not hold.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed persisted data. Carries the 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, int line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : ValidationError(what), line_(-1) {}

  int line() const { return line_; }

 private:
  int line_;
};

/// Filesystem-level failure (open/read/write).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mea
