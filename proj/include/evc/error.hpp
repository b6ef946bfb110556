#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evc {

enum class ErrorKind {
  Io,
  BadMagic,
  BadVersion,
  Truncated,
  LengthMismatch,
  NonFinite,
  Parse,
  Shape,
  Config,
  Domain,
  NoVoicedFrames,
  ZeroVariance,
  Range,
  TooShort,
  State,
  Data,
  TrainingDiverged,
  Pairing,
};

std::string_view to_string(ErrorKind kind);

/// Every failure in the library surfaces as this one exception type; the
/// kind tells callers (and the CLI exit-code mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace evc
