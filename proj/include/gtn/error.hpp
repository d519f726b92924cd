#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gtn {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kEmptyData,
  kParse,
  kIo,
  kModelFormat,
  kConfig,
};

/// Stable machine-readable tag for an error code, e.g. "E_DIM".
std::string_view error_code_tag(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gtn
