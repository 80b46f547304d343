#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace handgen {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input content violates a contract (bad file content, degenerate geometry,
/// inconsistent arguments). The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure. The CLI maps these to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed line in a JSON-lines file. Line numbers are 1-based.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& detail)
      : ValidationError(source + ":" + std::to_string(line) + ": " + detail), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateFrameId : public ValidationError {
 public:
  explicit DuplicateFrameId(std::string id)
      : ValidationError("duplicate frame_id \"" + id + "\""), id_(std::move(id)) {}

  const std::string& frame_id() const noexcept { return id_; }

 private:
  std::string id_;
};

}  // namespace handgen
