#pragma once

#include <stdexcept>
#include <string>

namespace clustop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data or parameters violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file could not be read, parsed, or written.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The external model backend failed or produced inconsistent output.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure with the pipeline stage it happened in.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace clustop
