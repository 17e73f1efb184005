#pragma once

#include <stdexcept>
#include <string>

namespace ergo {

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  invalid_model,
  invalid_policy,
  divergence,
  sampling,
  degenerate_fit,
  selection_failure,
  cap_exceeded,
  precondition,
  schema,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when integration produces a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(double time, const std::string& what)
      : Error(ErrorKind::divergence, what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace ergo
