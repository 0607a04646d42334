#pragma once

// Property checks for the recursive splitter, shared by the unit and
// acceptance suites. Each returns an empty string on success, otherwise a
// description of the first violation.

#include <algorithm>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ragscrape/chunker.hpp"
#include "ragscrape/unicode.hpp"

namespace ragscrape::testkit {

struct SplitCase {
  std::string text;
  SplitConfig config;
};

inline SplitCase random_split_case(std::mt19937_64& rng) {
  static const std::vector<std::string> kAlphabet = {"a", "b", "c", " ", "\n", "x", "\xC3\xA9", "\xE2\x82\xAC", "-", "."};
  static const std::vector<std::string> kDelims = {"\n\n", "\n", " ", ".", "-", "ab", "\xC3\xA9"};
  SplitCase c;
  const std::size_t len = std::uniform_int_distribution<std::size_t>(0, 400)(rng);
  std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
  for (std::size_t i = 0; i < len; ++i) c.text += kAlphabet[pick(rng)];
  std::vector<std::string> pool = kDelims;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::uniform_int_distribution<std::size_t>(1, pool.size())(rng));
  c.config.delimiters = pool;
  c.config.max_chunk_size = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
  return c;
}

inline bool contains(const std::u32string& hay, const std::u32string& needle) {
  return hay.find(needle) != std::u32string::npos;
}

// Lossless reconstruction, contiguous spans, text == input[span], dense
// ordinals.
inline std::string check_partition(const std::string& text, const std::vector<Chunk>& chunks) {
  const std::u32string u = unicode::to_u32(text);
  std::string joined;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const Chunk& c = chunks[i];
    if (c.ordinal != i) return "ordinal gap at " + std::to_string(i);
    if (c.span.start != pos) return "span gap at " + std::to_string(i);
    if (c.span.end <= c.span.start) return "empty chunk at " + std::to_string(i);
    if (unicode::to_utf8(u.substr(c.span.start, c.span.length())) != c.text) return "span/text mismatch";
    pos = c.span.end;
    joined += c.text;
  }
  if (pos != u.size()) return "spans do not cover input";
  if (joined != text) return "reconstruction differs";
  return {};
}

// Chunks above the limit cannot be split further: stripped of at most one
// trailing delimiter occurrence, they contain no delimiter of lower
// priority than the one that produced them. Checking against every
// delimiter after the first that still occurs would be too strong; the
// weakest sound form checks the last delimiter, which is available at
// every depth.
inline std::string check_size_bound(const std::vector<Chunk>& chunks, const SplitConfig& config) {
  std::vector<std::u32string> delims;
  for (const auto& d : config.delimiters) delims.push_back(unicode::to_u32(d));
  for (const auto& c : chunks) {
    const std::u32string u = unicode::to_u32(c.text);
    if (u.size() <= config.max_chunk_size) continue;
    const std::u32string& last = delims.back();
    std::u32string body = u;
    if (body.size() >= last.size() && body.compare(body.size() - last.size(), last.size(), last) == 0) {
      body.resize(body.size() - last.size());
    }
    if (contains(body, last)) return "oversize chunk still splittable: ordinal " + std::to_string(c.ordinal);
  }
  return {};
}

// If delimiters[0] occurs, every boundary at the top level ends an
// occurrence of it. Top-level boundaries are the ends of the pieces of a
// plain split on delimiters[0]; every such boundary must be a chunk
// boundary.
inline std::string check_top_priority(const std::string& text, const std::vector<Chunk>& chunks,
                                      const SplitConfig& config) {
  const std::u32string u = unicode::to_u32(text);
  const std::u32string d = unicode::to_u32(config.delimiters.front());
  if (u.size() <= config.max_chunk_size || !contains(u, d)) return {};
  std::vector<std::size_t> ends;
  for (const auto& c : chunks) ends.push_back(c.span.end);
  for (std::size_t at = u.find(d); at != std::u32string::npos; at = u.find(d, at + d.size())) {
    const std::size_t boundary = at + d.size();
    if (boundary == u.size()) break;
    if (std::find(ends.begin(), ends.end(), boundary) == ends.end()) {
      return "top delimiter boundary " + std::to_string(boundary) + " is not a chunk boundary";
    }
  }
  return {};
}

inline std::string check_monotone(const std::string& text, const SplitConfig& config) {
  std::size_t prev = 0;
  for (std::size_t limit = config.max_chunk_size + 8; limit >= 1; --limit) {
    SplitConfig c = config;
    c.max_chunk_size = limit;
    const std::size_t n = split_recursive(text, c).size();
    if (n < prev) return "chunk count fell from " + std::to_string(prev) + " to " + std::to_string(n);
    prev = n;
  }
  return {};
}

// Straight transcription of the procedure, written separately from the
// library as an oracle: plain strings, no spans.
inline void reference_split(const std::u32string& text, const std::vector<std::u32string>& delims,
                            std::size_t first, std::size_t limit, std::vector<std::u32string>& out) {
  if (text.empty()) return;
  if (text.size() <= limit) {
    out.push_back(text);
    return;
  }
  std::size_t di = first;
  while (di < delims.size() && !contains(text, delims[di])) ++di;
  if (di == delims.size()) {
    out.push_back(text);
    return;
  }
  const std::u32string& d = delims[di];
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t at = text.find(d, start);
    const std::size_t end = at == std::u32string::npos ? text.size() : at + d.size();
    const std::u32string piece = text.substr(start, end - start);
    if (piece.size() <= limit) {
      out.push_back(piece);
    } else {
      reference_split(piece, delims, di + 1, limit, out);
    }
    start = end;
  }
}

inline std::vector<std::string> reference_split(const std::string& text, const SplitConfig& config) {
  std::vector<std::u32string> delims;
  for (const auto& d : config.delimiters) delims.push_back(unicode::to_u32(d));
  std::vector<std::u32string> pieces;
  reference_split(unicode::to_u32(text), delims, 0, config.max_chunk_size, pieces);
  std::vector<std::string> out;
  for (const auto& p : pieces) out.push_back(unicode::to_utf8(p));
  return out;
}

inline std::string check_reference(const std::string& text, const std::vector<Chunk>& chunks,
                                   const SplitConfig& config) {
  const auto expected = reference_split(text, config);
  if (expected.size() != chunks.size()) {
    return "reference gives " + std::to_string(expected.size()) + " chunks, library " +
           std::to_string(chunks.size());
  }
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].text != expected[i]) return "chunk " + std::to_string(i) + " differs from reference";
  }
  return {};
}

inline std::string check_all(const SplitCase& c) {
  const auto chunks = split_recursive(c.text, c.config);
  if (auto e = check_reference(c.text, chunks, c.config); !e.empty()) return e;
  if (auto e = check_partition(c.text, chunks); !e.empty()) return e;
  if (auto e = check_size_bound(chunks, c.config); !e.empty()) return e;
  if (auto e = check_top_priority(c.text, chunks, c.config); !e.empty()) return e;
  if (split_recursive(c.text, c.config) != chunks) return "nondeterministic";
  return check_monotone(c.text, c.config);
}

}  // namespace ragscrape::testkit
