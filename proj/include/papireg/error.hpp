#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace papireg {

enum class ErrorCode {
  InvalidArgument,
  ZeroPoint,
  InsufficientSpread,
  EmptyPixel,
  BadShape,
  ShapeMismatch,
  FormatError,
  NormError,
  IoError,
  Degenerate,
  TooFew,
  NoConsensus,
  EmptyGroundTruth,
  LengthMismatch,
  NotARotation,
  EmptyList,
  BadDims,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above; the
// what() string is prefixed with the code name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace papireg
