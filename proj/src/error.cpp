#include "ragscrape/error.hpp"

namespace ragscrape {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kRobotsDisallowed: return "RobotsDisallowed";
    case ErrorCode::kFetchFailed: return "FetchFailed";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kEmbedFailed: return "EmbedFailed";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kCorruptIndex: return "CorruptIndex";
    case ErrorCode::kTemplateError: return "TemplateError";
    case ErrorCode::kLlmUnavailable: return "LlmUnavailable";
    case ErrorCode::kOfflineViolation: return "OfflineViolation";
  }
  return "Unknown";
}

}  // namespace ragscrape
