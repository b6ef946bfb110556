#include "evc/error.hpp"

namespace evc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::BadVersion: return "BadVersion";
    case ErrorKind::Truncated: return "Truncated";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::NoVoicedFrames: return "NoVoicedFrames";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::Range: return "RangeError";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::State: return "StateError";
    case ErrorKind::Data: return "DataError";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::Pairing: return "PairingError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace evc
