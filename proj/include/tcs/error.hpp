#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tcs {

// Failure classes. The CLI maps each one to its own exit code.
enum class ErrorKind {
  kInvalidArgument,
  kConfig,
  kIo,
  kSchema,
  kNumeric,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tcs
