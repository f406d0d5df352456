#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iops {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Carries the 1-based line where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class MalformedBlockError : public Error {
 public:
  using Error::Error;
};

/// A psum store ran out of segment slots or capacity under the `fail` policy.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A dense operand row required by an SDMM block was not available.
class GatherError : public Error {
 public:
  using Error::Error;
};

}  // namespace iops
