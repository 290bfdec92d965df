#include "affdim/error.hpp"

namespace affdim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input:
      return "invalid-input";
    case ErrorCode::degenerate_subspace:
      return "degenerate-subspace";
    case ErrorCode::resource_limit:
      return "resource-limit";
    case ErrorCode::unsupported:
      return "unsupported";
    case ErrorCode::internal_consistency:
      return "internal-consistency";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace affdim
