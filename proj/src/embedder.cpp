#include "ragscrape/embedder.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "ragscrape/error.hpp"
#include "ragscrape/http.hpp"
#include "ragscrape/parallel.hpp"
#include "ragscrape/unicode.hpp"

namespace ragscrape {

bool EmbeddingVector::is_zero() const noexcept {
  for (float v : values) {
    if (v != 0.0f) return false;
  }
  return true;
}

double EmbeddingVector::norm() const noexcept {
  double sum = 0.0;
  for (float v : values) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

void EmbedderSpec::validate() const {
  if (dims == 0) throw Error(ErrorCode::kInvalidConfig, "embedder dims must be positive");
  if (kind == EmbedderKind::kRemoteApi) {
    if (!endpoint || endpoint->empty() || !model_id || model_id->empty()) {
      throw Error(ErrorCode::kInvalidConfig, "remote embedder requires endpoint and model_id");
    }
    if (batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "batch_size must be positive");
  }
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void l2_normalize(std::vector<float>& values) {
  double sum = 0.0;
  for (float v : values) sum += static_cast<double>(v) * v;
  if (sum == 0.0) return;
  const double inv = 1.0 / std::sqrt(sum);
  for (float& v : values) v = static_cast<float>(v * inv);
}

namespace {

EmbeddingVector embed_local(std::string_view text, std::size_t dims) {
  const std::u32string lowered = unicode::to_lower(unicode::to_u32(text));
  std::vector<double> counts(dims, 0.0);
  bool any = false;
  std::string gram;
  for (std::size_t i = 0; i + 3 <= lowered.size(); ++i) {
    gram.clear();
    for (std::size_t k = 0; k < 3; ++k) unicode::append_utf8(gram, lowered[i + k]);
    counts[fnv1a64(gram) % dims] += 1.0;
    any = true;
  }
  EmbeddingVector out;
  out.values.assign(dims, 0.0f);
  if (!any) return out;
  double sum = 0.0;
  for (double c : counts) sum += c * c;
  const double inv = 1.0 / std::sqrt(sum);
  for (std::size_t d = 0; d < dims; ++d) out.values[d] = static_cast<float>(counts[d] * inv);
  return out;
}

std::vector<EmbeddingVector> embed_remote_group(const std::vector<std::string>& texts,
                                                std::size_t first, std::size_t count,
                                                const EmbedderSpec& spec) {
  nlohmann::json input = nlohmann::json::array();
  for (std::size_t i = first; i < first + count; ++i) input.push_back(texts[i]);
  http::Request request;
  request.method = "POST";
  request.url = *spec.endpoint;
  request.body = nlohmann::json{{"model", *spec.model_id}, {"input", input}}.dump();
  request.timeout = spec.timeout;
  if (const char* key = std::getenv(kEmbedApiKeyEnv); key && *key) {
    request.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (unsigned attempt = 0; attempt <= spec.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(spec.retry_backoff * (1u << (attempt - 1)));
    const http::Response response = http::send(request);
    if (response.failure != http::Failure::kNone) {
      last_error = response.error;
      continue;
    }
    if (response.status >= 500 || response.status == 429) {
      last_error = "HTTP " + std::to_string(response.status);
      continue;
    }
    if (response.status != 200) {
      throw Error(ErrorCode::kEmbedFailed, "embedding API returned HTTP " + std::to_string(response.status));
    }
    nlohmann::json body = nlohmann::json::parse(response.body, nullptr, false);
    if (body.is_discarded() || !body.contains("data") || !body["data"].is_array()) {
      throw Error(ErrorCode::kEmbedFailed, "malformed embedding response");
    }
    const auto& data = body["data"];
    if (data.size() != count) {
      throw Error(ErrorCode::kEmbedFailed, "embedding response has " + std::to_string(data.size()) +
                                               " items, expected " + std::to_string(count));
    }
    std::vector<EmbeddingVector> out;
    out.reserve(count);
    for (const auto& item : data) {
      const auto& emb = item.at("embedding");
      if (!emb.is_array() || emb.size() != spec.dims) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "remote embedding has " + std::to_string(emb.size()) + " dims, expected " +
                        std::to_string(spec.dims));
      }
      EmbeddingVector v;
      v.values.reserve(spec.dims);
      for (const auto& x : emb) {
        const double d = x.get<double>();
        if (!std::isfinite(d)) throw Error(ErrorCode::kEmbedFailed, "non-finite embedding value");
        v.values.push_back(static_cast<float>(d));
      }
      l2_normalize(v.values);
      out.push_back(std::move(v));
    }
    return out;
  }
  throw Error(ErrorCode::kEmbedFailed, "embedding API failed after retries: " + last_error);
}

}  // namespace

EmbeddingVector embed_text(std::string_view text, const EmbedderSpec& spec) {
  spec.validate();
  if (spec.kind == EmbedderKind::kLocalNgram) return embed_local(text, spec.dims);
  return std::move(embed_batch({std::string(text)}, spec).front());
}

std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts,
                                         const EmbedderSpec& spec) {
  spec.validate();
  std::vector<EmbeddingVector> out(texts.size());
  if (spec.kind == EmbedderKind::kLocalNgram) {
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = embed_local(texts[i], spec.dims);
    return out;
  }
  const std::size_t groups = (texts.size() + spec.batch_size - 1) / spec.batch_size;
  parallel_for(groups, spec.max_in_flight, [&](std::size_t g) {
    const std::size_t first = g * spec.batch_size;
    const std::size_t count = std::min(spec.batch_size, texts.size() - first);
    auto part = embed_remote_group(texts, first, count, spec);
    for (std::size_t i = 0; i < count; ++i) out[first + i] = std::move(part[i]);
  });
  return out;
}

nlohmann::json embedder_spec_to_json(const EmbedderSpec& spec) {
  nlohmann::json j{{"kind", spec.kind == EmbedderKind::kLocalNgram ? "local_ngram" : "remote_api"},
                   {"dims", spec.dims}};
  if (spec.model_id) j["model_id"] = *spec.model_id;
  if (spec.endpoint) j["endpoint"] = *spec.endpoint;
  if (spec.kind == EmbedderKind::kRemoteApi) {
    j["batch_size"] = spec.batch_size;
    j["max_retries"] = spec.max_retries;
    j["retry_backoff_ms"] = spec.retry_backoff.count();
    j["timeout_ms"] = spec.timeout.count();
    j["max_in_flight"] = spec.max_in_flight;
  }
  return j;
}

EmbedderSpec embedder_spec_from_json(const nlohmann::json& j) {
  EmbedderSpec spec;
  const std::string kind = j.value("kind", "local_ngram");
  if (kind == "local_ngram") {
    spec.kind = EmbedderKind::kLocalNgram;
  } else if (kind == "remote_api") {
    spec.kind = EmbedderKind::kRemoteApi;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown embedder kind: " + kind);
  }
  spec.dims = j.value("dims", spec.dims);
  if (j.contains("model_id")) spec.model_id = j["model_id"].get<std::string>();
  if (j.contains("endpoint")) spec.endpoint = j["endpoint"].get<std::string>();
  spec.batch_size = j.value("batch_size", spec.batch_size);
  spec.max_retries = j.value("max_retries", spec.max_retries);
  spec.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", spec.retry_backoff.count()));
  spec.timeout = std::chrono::milliseconds(j.value("timeout_ms", spec.timeout.count()));
  spec.max_in_flight = j.value("max_in_flight", spec.max_in_flight);
  spec.validate();
  return spec;
}

}  // namespace ragscrape
