#pragma once

#include <stdexcept>
#include <string>

namespace affdim {

enum class ErrorCode {
  invalid_input,
  degenerate_subspace,
  resource_limit,
  unsupported,
  internal_consistency,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable category; the CLI maps categories to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace affdim
