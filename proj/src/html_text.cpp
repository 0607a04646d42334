#include <array>
#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <unordered_map>

#include "ragscrape/error.hpp"
#include "ragscrape/ingest.hpp"
#include "ragscrape/unicode.hpp"

namespace ragscrape {

namespace {

const std::unordered_map<std::string_view, char32_t>& named_entities() {
  static const std::unordered_map<std::string_view, char32_t> table{
      {"amp", U'&'},        {"lt", U'<'},          {"gt", U'>'},          {"quot", U'"'},
      {"apos", U'\''},      {"nbsp", 0xA0},        {"iexcl", 0xA1},       {"cent", 0xA2},
      {"pound", 0xA3},      {"curren", 0xA4},      {"yen", 0xA5},         {"brvbar", 0xA6},
      {"sect", 0xA7},       {"uml", 0xA8},         {"copy", 0xA9},        {"ordf", 0xAA},
      {"laquo", 0xAB},      {"not", 0xAC},         {"shy", 0xAD},         {"reg", 0xAE},
      {"macr", 0xAF},       {"deg", 0xB0},         {"plusmn", 0xB1},      {"sup2", 0xB2},
      {"sup3", 0xB3},       {"acute", 0xB4},       {"micro", 0xB5},       {"para", 0xB6},
      {"middot", 0xB7},     {"cedil", 0xB8},       {"sup1", 0xB9},        {"ordm", 0xBA},
      {"raquo", 0xBB},      {"frac14", 0xBC},      {"frac12", 0xBD},      {"frac34", 0xBE},
      {"iquest", 0xBF},     {"Agrave", 0xC0},      {"Aacute", 0xC1},      {"Acirc", 0xC2},
      {"Atilde", 0xC3},     {"Auml", 0xC4},        {"Aring", 0xC5},       {"AElig", 0xC6},
      {"Ccedil", 0xC7},     {"Egrave", 0xC8},      {"Eacute", 0xC9},      {"Ecirc", 0xCA},
      {"Euml", 0xCB},       {"Igrave", 0xCC},      {"Iacute", 0xCD},      {"Icirc", 0xCE},
      {"Iuml", 0xCF},       {"ETH", 0xD0},         {"Ntilde", 0xD1},      {"Ograve", 0xD2},
      {"Oacute", 0xD3},     {"Ocirc", 0xD4},       {"Otilde", 0xD5},      {"Ouml", 0xD6},
      {"times", 0xD7},      {"Oslash", 0xD8},      {"Ugrave", 0xD9},      {"Uacute", 0xDA},
      {"Ucirc", 0xDB},      {"Uuml", 0xDC},        {"Yacute", 0xDD},      {"THORN", 0xDE},
      {"szlig", 0xDF},      {"agrave", 0xE0},      {"aacute", 0xE1},      {"acirc", 0xE2},
      {"atilde", 0xE3},     {"auml", 0xE4},        {"aring", 0xE5},       {"aelig", 0xE6},
      {"ccedil", 0xE7},     {"egrave", 0xE8},      {"eacute", 0xE9},      {"ecirc", 0xEA},
      {"euml", 0xEB},       {"igrave", 0xEC},      {"iacute", 0xED},      {"icirc", 0xEE},
      {"iuml", 0xEF},       {"eth", 0xF0},         {"ntilde", 0xF1},      {"ograve", 0xF2},
      {"oacute", 0xF3},     {"ocirc", 0xF4},       {"otilde", 0xF5},      {"ouml", 0xF6},
      {"divide", 0xF7},     {"oslash", 0xF8},      {"ugrave", 0xF9},      {"uacute", 0xFA},
      {"ucirc", 0xFB},      {"uuml", 0xFC},        {"yacute", 0xFD},      {"thorn", 0xFE},
      {"yuml", 0xFF},       {"OElig", 0x152},      {"oelig", 0x153},      {"Scaron", 0x160},
      {"scaron", 0x161},    {"Yuml", 0x178},       {"fnof", 0x192},       {"circ", 0x2C6},
      {"tilde", 0x2DC},     {"Alpha", 0x391},      {"Beta", 0x392},       {"Gamma", 0x393},
      {"Delta", 0x394},     {"Omega", 0x3A9},      {"alpha", 0x3B1},      {"beta", 0x3B2},
      {"gamma", 0x3B3},     {"delta", 0x3B4},      {"pi", 0x3C0},         {"sigma", 0x3C3},
      {"omega", 0x3C9},     {"ensp", 0x2002},      {"emsp", 0x2003},      {"thinsp", 0x2009},
      {"zwnj", 0x200C},     {"zwj", 0x200D},       {"lrm", 0x200E},       {"rlm", 0x200F},
      {"ndash", 0x2013},    {"mdash", 0x2014},     {"lsquo", 0x2018},     {"rsquo", 0x2019},
      {"sbquo", 0x201A},    {"ldquo", 0x201C},     {"rdquo", 0x201D},     {"bdquo", 0x201E},
      {"dagger", 0x2020},   {"Dagger", 0x2021},    {"bull", 0x2022},      {"hellip", 0x2026},
      {"permil", 0x2030},   {"prime", 0x2032},     {"Prime", 0x2033},     {"lsaquo", 0x2039},
      {"rsaquo", 0x203A},   {"euro", 0x20AC},      {"trade", 0x2122},     {"larr", 0x2190},
      {"uarr", 0x2191},     {"rarr", 0x2192},      {"darr", 0x2193},      {"harr", 0x2194},
      {"minus", 0x2212},    {"le", 0x2264},        {"ge", 0x2265},        {"ne", 0x2260},
      {"infin", 0x221E},    {"check", 0x2713},     {"star", 0x2606},
  };
  return table;
}

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ascii_alnum(char c) { return is_ascii_alpha(c) || (c >= '0' && c <= '9'); }
bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool istarts_with(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  }
  return true;
}

std::size_t ifind(std::string_view s, std::size_t from, std::string_view needle) {
  for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
    if (istarts_with(s, i, needle)) return i;
  }
  return std::string_view::npos;
}

// Decodes character references in `text`, appending to `out`.
void decode_entities(std::string_view text, std::string& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t amp = text.find('&', i);
    if (amp == std::string_view::npos) {
      out.append(text.substr(i));
      return;
    }
    out.append(text.substr(i, amp - i));
    i = amp + 1;
    if (i < text.size() && text[i] == '#') {
      std::size_t j = i + 1;
      int base = 10;
      if (j < text.size() && (text[j] == 'x' || text[j] == 'X')) {
        base = 16;
        ++j;
      }
      std::uint32_t value = 0;
      const auto [end, ec] = std::from_chars(text.data() + j, text.data() + text.size(), value, base);
      const std::size_t stop = static_cast<std::size_t>(end - text.data());
      if (stop == j || ec == std::errc::invalid_argument) {
        out.push_back('&');
        continue;
      }
      char32_t cp = static_cast<char32_t>(value);
      if (ec == std::errc::result_out_of_range || cp == 0 || cp > 0x10FFFF ||
          (cp >= 0xD800 && cp <= 0xDFFF)) {
        cp = unicode::kReplacementChar;
      }
      unicode::append_utf8(out, cp);
      i = stop < text.size() && text[stop] == ';' ? stop + 1 : stop;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && j - i < 32 && is_ascii_alnum(text[j])) ++j;
    const std::string_view name = text.substr(i, j - i);
    const auto& table = named_entities();
    if (j < text.size() && text[j] == ';') {
      if (const auto it = table.find(name); it != table.end()) {
        unicode::append_utf8(out, it->second);
        i = j + 1;
        continue;
      }
    } else if (name == "amp" || name == "lt" || name == "gt" || name == "quot" || name == "nbsp") {
      unicode::append_utf8(out, table.at(name));
      i = j;
      continue;
    }
    out.push_back('&');
  }
}

bool is_block_element(std::string_view name) {
  static constexpr std::array<std::string_view, 18> kBlocks{
      "p",  "div", "li", "tr",      "h1",      "h2",    "h3", "h4",         "h5",
      "h6", "section", "article", "table", "ul", "ol", "blockquote", "pre", "br"};
  for (auto b : kBlocks) {
    if (b == name) return true;
  }
  return false;
}

struct Tag {
  std::string name;  // lowercase
  bool closing = false;
  std::string alt_title;  // decoded alt/title attribute text, space separated
  std::size_t end = 0;    // index one past '>'
};

// Parses a tag starting at s[pos] == '<'. Returns false if no '>' closes it.
bool parse_tag(std::string_view s, std::size_t pos, Tag& tag) {
  std::size_t i = pos + 1;
  if (s[i] == '/') {
    tag.closing = true;
    ++i;
  }
  const std::size_t name_start = i;
  while (i < s.size() && !is_ascii_space(s[i]) && s[i] != '/' && s[i] != '>') ++i;
  tag.name = lower(s.substr(name_start, i - name_start));
  while (i < s.size()) {
    while (i < s.size() && (is_ascii_space(s[i]) || s[i] == '/')) ++i;
    if (i >= s.size()) return false;
    if (s[i] == '>') {
      tag.end = i + 1;
      return true;
    }
    const std::size_t attr_start = i;
    while (i < s.size() && !is_ascii_space(s[i]) && s[i] != '=' && s[i] != '>' && s[i] != '/') ++i;
    const std::string attr = lower(s.substr(attr_start, i - attr_start));
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    if (i < s.size() && s[i] == '=') {
      ++i;
      while (i < s.size() && is_ascii_space(s[i])) ++i;
      if (i >= s.size()) return false;
      std::string_view value;
      if (s[i] == '"' || s[i] == '\'') {
        const char quote = s[i];
        const std::size_t close = s.find(quote, i + 1);
        if (close == std::string_view::npos) return false;
        value = s.substr(i + 1, close - i - 1);
        i = close + 1;
      } else {
        const std::size_t vstart = i;
        while (i < s.size() && !is_ascii_space(s[i]) && s[i] != '>') ++i;
        value = s.substr(vstart, i - vstart);
      }
      if (!tag.closing && (attr == "alt" || attr == "title")) {
        tag.alt_title.push_back(' ');
        decode_entities(value, tag.alt_title);
        tag.alt_title.push_back(' ');
      }
    }
  }
  return false;
}

class TextBuilder {
 public:
  void text(std::string_view decoded, bool preserve) {
    if (decoded.empty()) return;
    if (!block_.empty() && preserve != preserve_) flush();
    preserve_ = preserve;
    block_.append(decoded);
  }

  void flush() {
    std::string rendered = preserve_ ? block_ : collapse(block_);
    if (!preserve_ || is_blank(rendered)) rendered = trim(rendered);
    block_.clear();
    if (rendered.empty()) return;
    out_ += defuse_tags(rendered);
    out_ += "\n\n";
  }

  std::string finish() {
    flush();
    if (out_.size() >= 2 && out_.compare(out_.size() - 2, 2, "\n\n") == 0) out_.resize(out_.size() - 2);
    return std::move(out_);
  }

 private:
  static bool nbsp_at(std::string_view s, std::size_t i) {
    return i + 1 < s.size() && static_cast<unsigned char>(s[i]) == 0xC2 &&
           static_cast<unsigned char>(s[i + 1]) == 0xA0;
  }

  // Width in bytes of the whitespace character at s[i], or 0.
  static std::size_t space_width(std::string_view s, std::size_t i) {
    if (is_ascii_space(s[i]) || s[i] == '\v') return 1;
    return nbsp_at(s, i) ? 2 : 0;
  }

  static std::string collapse(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (std::size_t i = 0; i < s.size();) {
      if (const std::size_t w = space_width(s, i)) {
        if (!in_space) out.push_back(' ');
        in_space = true;
        i += w;
      } else {
        out.push_back(s[i++]);
        in_space = false;
      }
    }
    return out;
  }

  static bool is_blank(std::string_view s) {
    for (std::size_t i = 0; i < s.size();) {
      const std::size_t w = space_width(s, i);
      if (w == 0) return false;
      i += w;
    }
    return true;
  }

  static std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && space_width(s, b)) b += space_width(s, b);
    while (e > b) {
      if (is_ascii_space(s[e - 1]) || s[e - 1] == '\v') {
        --e;
      } else if (e - b >= 2 && nbsp_at(s, e - 2)) {
        e -= 2;
      } else {
        break;
      }
    }
    return std::string(s.substr(b, e - b));
  }

  // Decoded "&lt;" must not reintroduce something that reads as a tag.
  static std::string defuse_tags(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      out.push_back(s[i]);
      if (s[i] == '<' && i + 1 < s.size() && (is_ascii_alpha(s[i + 1]) || s[i + 1] == '/')) {
        out.push_back(' ');
      }
    }
    return out;
  }

  std::string out_;
  std::string block_;
  bool preserve_ = false;
};

}  // namespace

std::string extract_text(std::string_view html) {
  TextBuilder builder;
  int pre_depth = 0;
  bool in_head = false;
  bool skip_newline = false;  // a newline directly after <pre> is not content
  std::string decoded;

  const auto emit_text = [&](std::string_view raw) {
    if (in_head || raw.empty()) return;
    decoded.clear();
    decode_entities(raw, decoded);
    std::string_view view = decoded;
    if (skip_newline) {
      if (!view.empty() && view.front() == '\n') view.remove_prefix(1);
      skip_newline = false;
    }
    builder.text(view, pre_depth > 0);
  };

  std::size_t i = 0;
  std::size_t text_start = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      ++i;
      continue;
    }
    const std::size_t lt = i;
    std::size_t resume = std::string_view::npos;

    if (html.compare(i, 4, "<!--") == 0) {
      const std::size_t close = html.find("-->", i + 4);
      resume = close == std::string_view::npos ? html.size() : close + 3;
    } else if (istarts_with(html, i, "<![cdata[")) {
      const std::size_t close = html.find("]]>", i);
      resume = close == std::string_view::npos ? html.size() : close + 3;
    } else if (i + 1 < html.size() && (html[i + 1] == '!' || html[i + 1] == '?')) {
      const std::size_t close = html.find('>', i);
      resume = close == std::string_view::npos ? html.size() : close + 1;
    } else if (i + 1 < html.size() &&
               (is_ascii_alpha(html[i + 1]) || (html[i + 1] == '/' && i + 2 < html.size() && is_ascii_alpha(html[i + 2])))) {
      Tag tag;
      if (parse_tag(html, i, tag)) {
        emit_text(html.substr(text_start, lt - text_start));
        resume = tag.end;
        const std::string& name = tag.name;
        if (!tag.closing && (name == "script" || name == "style" || name == "noscript")) {
          const std::size_t close = ifind(html, tag.end, "</" + name);
          if (close == std::string_view::npos) {
            resume = html.size();
          } else {
            const std::size_t gt = html.find('>', close);
            resume = gt == std::string_view::npos ? html.size() : gt + 1;
          }
        } else if (name == "head") {
          in_head = !tag.closing;
        } else if (name == "body" && !tag.closing) {
          in_head = false;
        } else if (!in_head) {
          if (is_block_element(name)) {
            builder.flush();
            if (name == "pre") {
              if (tag.closing) {
                if (pre_depth > 0) --pre_depth;
              } else {
                ++pre_depth;
                skip_newline = true;
              }
            }
          }
          if (!tag.alt_title.empty()) builder.text(tag.alt_title, pre_depth > 0);
        }
        i = text_start = resume;
        continue;
      }
    }

    if (resume != std::string_view::npos) {
      emit_text(html.substr(text_start, lt - text_start));
      i = text_start = resume;
    } else {
      ++i;  // stray '<' is literal text
    }
  }
  emit_text(html.substr(text_start));
  return builder.finish();
}

NormalizedText html_to_text(const RawPage& page, TextMode mode) {
  if (mode == TextMode::kRawHtml) return NormalizedText{page.url, page.html, mode};
  return NormalizedText{page.url, extract_text(page.html), mode};
}

std::string_view text_mode_name(TextMode mode) noexcept {
  return mode == TextMode::kRawHtml ? "raw_html" : "extracted_text";
}

TextMode text_mode_from_name(std::string_view name) {
  if (name == "extracted_text") return TextMode::kExtractedText;
  if (name == "raw_html") return TextMode::kRawHtml;
  throw Error(ErrorCode::kInvalidConfig, "unknown text mode: " + std::string(name));
}

}  // namespace ragscrape
