#pragma once

#include <stdexcept>
#include <string>

namespace jdsr {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch,
  kBehindCamera,
  kNearPiRotation,
  kIo,
  kParse,
  kNumerical,
};

/// Base exception for all library failures. The code is what the C API
/// reports; the message carries file names and offending values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace jdsr
