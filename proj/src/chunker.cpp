#include "ragscrape/chunker.hpp"

#include <algorithm>
#include <unordered_set>

#include "ragscrape/error.hpp"
#include "ragscrape/unicode.hpp"

namespace ragscrape {

void SplitConfig::validate() const {
  if (delimiters.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "delimiter list is empty");
  }
  if (max_chunk_size == 0) {
    throw Error(ErrorCode::kInvalidConfig, "max_chunk_size must be positive");
  }
  std::unordered_set<std::string> seen;
  for (const auto& d : delimiters) {
    if (d.empty()) throw Error(ErrorCode::kInvalidConfig, "empty delimiter");
    if (!seen.insert(d).second) {
      throw Error(ErrorCode::kInvalidConfig, "duplicate delimiter");
    }
  }
}

SplitConfig default_split_config() { return SplitConfig{{"\n\n", "\n", " "}, 1000}; }

namespace {

class Splitter {
 public:
  Splitter(std::u32string_view text, const SplitConfig& config)
      : text_(text), limit_(config.max_chunk_size) {
    delimiters_.reserve(config.delimiters.size());
    for (const auto& d : config.delimiters) delimiters_.push_back(unicode::to_u32(d));
  }

  std::vector<Span> run() {
    if (text_.empty()) return {};
    if (text_.size() <= limit_) {
      spans_.push_back({0, text_.size()});
    } else {
      split({0, text_.size()}, 0);
    }
    return std::move(spans_);
  }

 private:
  // `piece` exceeds the limit; try delimiters from `first` onward.
  void split(Span piece, std::size_t first) {
    const std::u32string_view view = text_.substr(piece.start, piece.length());
    for (std::size_t j = first; j < delimiters_.size(); ++j) {
      const std::u32string& delim = delimiters_[j];
      if (view.find(delim) == std::u32string_view::npos) continue;

      std::size_t begin = 0;
      while (begin < view.size()) {
        const std::size_t hit = view.find(delim, begin);
        const std::size_t end =
            hit == std::u32string_view::npos ? view.size() : hit + delim.size();
        const Span sub{piece.start + begin, piece.start + end};
        if (sub.length() <= limit_) {
          spans_.push_back(sub);
        } else {
          split(sub, j + 1);
        }
        begin = end;
      }
      return;
    }
    spans_.push_back(piece);
  }

  std::u32string_view text_;
  std::size_t limit_;
  std::vector<std::u32string> delimiters_;
  std::vector<Span> spans_;
};

}  // namespace

std::vector<Chunk> split_recursive(std::string_view text, const SplitConfig& config,
                                   std::string_view source_url) {
  config.validate();
  const std::u32string wide = unicode::to_u32(text);
  const std::vector<Span> spans = Splitter(wide, config).run();

  std::vector<Chunk> chunks;
  chunks.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& s = spans[i];
    chunks.push_back(Chunk{std::string(source_url), i, s,
                           unicode::to_utf8(std::u32string_view(wide).substr(s.start, s.length()))});
  }
  return chunks;
}

nlohmann::json chunk_to_json(const Chunk& chunk) {
  return nlohmann::json{{"source_url", chunk.source_url},
                        {"ordinal", chunk.ordinal},
                        {"start", chunk.span.start},
                        {"end", chunk.span.end},
                        {"text", chunk.text}};
}

Chunk chunk_from_json(const nlohmann::json& j) {
  Chunk c;
  c.source_url = j.at("source_url").get<std::string>();
  c.ordinal = j.at("ordinal").get<std::size_t>();
  c.span.start = j.at("start").get<std::size_t>();
  c.span.end = j.at("end").get<std::size_t>();
  c.text = j.at("text").get<std::string>();
  return c;
}

std::string chunks_to_jsonl(const std::vector<Chunk>& chunks) {
  std::string out;
  for (const auto& c : chunks) {
    out += chunk_to_json(c).dump();
    out += '\n';
  }
  return out;
}

}  // namespace ragscrape
