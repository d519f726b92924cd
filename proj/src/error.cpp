#include "gtn/error.hpp"

namespace gtn {

std::string_view error_code_tag(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "E_ARG";
    case ErrorCode::kDimensionMismatch: return "E_DIM";
    case ErrorCode::kEmptyData: return "E_EMPTY";
    case ErrorCode::kParse: return "E_PARSE";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kModelFormat: return "E_MODEL";
    case ErrorCode::kConfig: return "E_CONFIG";
  }
  return "E_UNKNOWN";
}

}  // namespace gtn
