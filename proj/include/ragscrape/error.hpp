#pragma once

#include <stdexcept>
#include <string>

namespace ragscrape {

enum class ErrorCode {
  kInvalidConfig,
  kRobotsDisallowed,
  kFetchFailed,
  kTimeout,
  kNotFound,
  kEmbedFailed,
  kDimensionMismatch,
  kIo,
  kCorruptIndex,
  kTemplateError,
  kLlmUnavailable,
  kOfflineViolation,
};

const char* error_code_name(ErrorCode code) noexcept;

// Single exception type for every failure the library reports. `status`
// carries the HTTP status for kFetchFailed and is 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int status = 0)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        status_(status) {}

  ErrorCode code() const noexcept { return code_; }
  int status() const noexcept { return status_; }

 private:
  ErrorCode code_;
  int status_;
};

}  // namespace ragscrape
