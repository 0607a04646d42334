#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace ragscrape::unicode {

inline constexpr char32_t kReplacementChar = U'\uFFFD';

struct DecodeResult {
  std::string text;  // valid UTF-8
  bool lossy = false;
};

// Validates UTF-8, replacing each maximal invalid subsequence with U+FFFD.
DecodeResult decode_utf8_lossy(std::string_view bytes);

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

// Length in Unicode scalar values.
std::size_t char_length(std::string_view utf8);

// Full Unicode case folding (ICU), e.g. "Straße" -> "strasse".
std::string fold_case(std::string_view utf8);

// Per-code-point simple lowercase mapping (length preserving).
std::u32string to_lower(std::u32string_view text);

bool is_whitespace(char32_t cp) noexcept;

}  // namespace ragscrape::unicode
