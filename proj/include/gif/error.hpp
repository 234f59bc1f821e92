#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gif {

enum class ErrorKind {
  InvalidParam,
  OutOfRange,
  DegenerateTime,
  NonFinite,
  NonFiniteState,
  MissingField,
  NoRoot,
  SizeMismatch,
  TooLarge,
  DegenerateInput,
  Config,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the CLI
// exit-code mapping) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::DegenerateTime: return "DegenerateTime";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace gif
