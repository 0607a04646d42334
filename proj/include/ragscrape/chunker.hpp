#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragscrape {

/// Recursive character text splitting parameters. Delimiters are tried in
/// order, largest structural unit first; sizes count Unicode scalar values.
struct SplitConfig {
  std::vector<std::string> delimiters;
  std::size_t max_chunk_size = 0;

  /// Throws Error{kInvalidConfig} on an empty/duplicate/empty-string
  /// delimiter list or a zero size limit.
  void validate() const;
};

/// Half-open character range [start, end) into the splitter input.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool operator==(const Span&) const = default;
};

struct Chunk {
  std::string source_url;
  std::size_t ordinal = 0;
  Span span;
  std::string text;

  bool operator==(const Chunk&) const = default;
};

/// ["\n\n", "\n", " "], limit 1000.
SplitConfig default_split_config();

/// Splits `text` on the first delimiter that occurs in it, keeping each
/// delimiter as the suffix of the piece before it. Pieces within the limit
/// are emitted; longer pieces recurse with the lower-priority delimiters,
/// and a piece in which none of those occur is emitted whole even if it
/// exceeds the limit. The returned chunks concatenate to `text` exactly.
std::vector<Chunk> split_recursive(std::string_view text, const SplitConfig& config,
                                   std::string_view source_url = {});

nlohmann::json chunk_to_json(const Chunk& chunk);
Chunk chunk_from_json(const nlohmann::json& j);

/// One JSON object per line: {"source_url","ordinal","start","end","text"}.
std::string chunks_to_jsonl(const std::vector<Chunk>& chunks);

}  // namespace ragscrape
