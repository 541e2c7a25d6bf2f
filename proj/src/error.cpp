#include "papireg/error.hpp"

namespace papireg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroPoint: return "ZeroPoint";
    case ErrorCode::InsufficientSpread: return "InsufficientSpread";
    case ErrorCode::EmptyPixel: return "EmptyPixel";
    case ErrorCode::BadShape: return "BadShape";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::NormError: return "NormError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::TooFew: return "TooFew";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::BadDims: return "BadDims";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace papireg
