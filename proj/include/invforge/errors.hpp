#ifndef INVFORGE_ERRORS_HPP
#define INVFORGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace invforge {

enum class ErrorKind {
  InvalidMatrix,
  NotPositiveDefinite,
  InvalidProblem,
  InvalidInput,
  PreconditionFailed,
  ControlIneffective,
  Diverged,
  IoError,
  ParseError,
  UnsupportedDimensionForPlots,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::InvalidProblem: return "InvalidProblem";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::ControlIneffective: return "ControlIneffective";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnsupportedDimensionForPlots: return "UnsupportedDimensionForPlots";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace invforge

#endif  // INVFORGE_ERRORS_HPP
