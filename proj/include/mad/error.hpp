#pragma once

#include <stdexcept>
#include <string>

namespace mad {

enum class ErrorKind {
  kInvalidInput,
  kEmptyInput,
  kSchemaMissing,
  kShape,
  kConfig,
  kLengthMismatch,
  kIo,
  kParse,
};

const char* to_string(ErrorKind kind);

// Single exception type for every module; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mad
