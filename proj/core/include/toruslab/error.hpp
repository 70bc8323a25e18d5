#pragma once

#include <stdexcept>
#include <string>

namespace toruslab {

enum class ErrorKind {
  Validation,   // malformed input or violated precondition
  OnSpectrum,   // spectral parameter sits on an unperturbed eigenvalue (pole)
  OutOfRange,   // query outside the enumerated spectrum table
  EmptyWindow,  // no spectrum members in a requested range
  Degenerate,   // (Id + U) annihilates the requested direction
  NonSPrime,    // functional evaluated on an interval that violates the S' guarantees
  Numeric,      // solver or numerical failure
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Process exit status used by the command-line tool for each kind.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::Validation, message);
}

}  // namespace toruslab
