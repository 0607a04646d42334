#include "ragscrape/unicode.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace ragscrape::unicode {

namespace {

// Returns the decoded code point and advances `pos`, or kReplacementChar
// (advancing past the maximal invalid prefix) on malformed input.
char32_t next_code_point(std::string_view s, std::size_t& pos, bool& bad) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char lead = byte(pos);
  bad = false;
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  std::size_t need = 0;
  char32_t cp = 0;
  unsigned char lo = 0x80, hi = 0xBF;
  if (lead >= 0xC2 && lead <= 0xDF) {
    need = 1;
    cp = lead & 0x1F;
  } else if (lead >= 0xE0 && lead <= 0xEF) {
    need = 2;
    cp = lead & 0x0F;
    if (lead == 0xE0) lo = 0xA0;
    if (lead == 0xED) hi = 0x9F;
  } else if (lead >= 0xF0 && lead <= 0xF4) {
    need = 3;
    cp = lead & 0x07;
    if (lead == 0xF0) lo = 0x90;
    if (lead == 0xF4) hi = 0x8F;
  } else {
    ++pos;
    bad = true;
    return kReplacementChar;
  }
  std::size_t i = pos + 1;
  for (std::size_t k = 0; k < need; ++k, ++i) {
    if (i >= s.size()) {
      pos = i;
      bad = true;
      return kReplacementChar;
    }
    const unsigned char c = byte(i);
    const unsigned char l = k == 0 ? lo : 0x80;
    const unsigned char h = k == 0 ? hi : 0xBF;
    if (c < l || c > h) {
      pos = i;
      bad = true;
      return kReplacementChar;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  pos = i;
  return cp;
}

}  // namespace

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

DecodeResult decode_utf8_lossy(std::string_view bytes) {
  DecodeResult result;
  result.text.reserve(bytes.size());
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t start = pos;
    bool bad = false;
    const char32_t cp = next_code_point(bytes, pos, bad);
    if (bad) {
      result.lossy = true;
      append_utf8(result.text, cp);
    } else {
      result.text.append(bytes.substr(start, pos - start));
    }
  }
  return result;
}

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  std::size_t pos = 0;
  bool bad = false;
  while (pos < utf8.size()) out.push_back(next_code_point(utf8, pos, bad));
  return out;
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) append_utf8(out, cp);
  return out;
}

std::size_t char_length(std::string_view utf8) {
  std::size_t n = 0;
  std::size_t pos = 0;
  bool bad = false;
  while (pos < utf8.size()) {
    next_code_point(utf8, pos, bad);
    ++n;
  }
  return n;
}

std::string fold_case(std::string_view utf8) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  s.foldCase();
  std::string out;
  s.toUTF8String(out);
  return out;
}

std::u32string to_lower(std::u32string_view text) {
  std::u32string out(text);
  for (char32_t& cp : out) {
    cp = static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
  }
  return out;
}

bool is_whitespace(char32_t cp) noexcept {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case U'\u00A0':
      return true;
    default:
      return false;
  }
}

}  // namespace ragscrape::unicode
