#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragscrape {

/// Dense embedding. Either L2-normalized or all-zero (the empty-text sentinel).
struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dims() const noexcept { return values.size(); }
  bool is_zero() const noexcept;
  double norm() const noexcept;
  bool operator==(const EmbeddingVector&) const = default;
};

enum class EmbedderKind { kLocalNgram, kRemoteApi };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kLocalNgram;
  std::size_t dims = 256;
  std::optional<std::string> model_id;
  std::optional<std::string> endpoint;

  // Remote client knobs.
  std::size_t batch_size = 32;
  unsigned max_retries = 3;
  std::chrono::milliseconds retry_backoff{250};
  std::chrono::milliseconds timeout{30000};
  std::size_t max_in_flight = 2;

  void validate() const;
};

inline constexpr const char* kEmbedApiKeyEnv = "RAGSCRAPE_EMBED_API_KEY";

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Local reference: lowercase, count character 3-grams hashed with FNV-1a
/// 64 into `dims` buckets, L2-normalize. Remote: one-element batch request.
EmbeddingVector embed_text(std::string_view text, const EmbedderSpec& spec);

/// Element-wise equal to embed_text. Remote requests are chunked into
/// batch_size groups, retried with exponential backoff; any failed group
/// fails the whole call.
std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts,
                                         const EmbedderSpec& spec);

/// Scales to unit length in place; leaves all-zero vectors untouched.
void l2_normalize(std::vector<float>& values);

nlohmann::json embedder_spec_to_json(const EmbedderSpec& spec);
EmbedderSpec embedder_spec_from_json(const nlohmann::json& j);

}  // namespace ragscrape
