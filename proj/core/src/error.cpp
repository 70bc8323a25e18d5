#include "toruslab/error.hpp"

namespace toruslab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::OnSpectrum: return "on-spectrum";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::EmptyWindow: return "empty-window";
    case ErrorKind::Degenerate: return "degenerate-extension";
    case ErrorKind::NonSPrime: return "non-sprime-configuration";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return 4;
    case ErrorKind::Numeric: return 3;
    default: return 2;
  }
}

}  // namespace toruslab
