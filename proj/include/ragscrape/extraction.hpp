#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragscrape/vector_store.hpp"

namespace ragscrape {

enum class ValueKind { kText, kNumber, kUrl };

std::string_view value_kind_name(ValueKind kind) noexcept;
ValueKind value_kind_from_name(std::string_view name);

/// One extraction target.
struct FieldSpec {
  std::string name;             // [a-z][a-z0-9_]*
  std::string retrieval_query;  // embedded and searched
  std::string prompt_template;  // {context} exactly once, {field_name} at least once
  std::size_t k = 5;
  ValueKind value_kind = ValueKind::kText;

  void validate() const;
};

enum class BackendKind { kRemoteChat, kMockScripted, kMockRegex };

std::string_view backend_kind_name(BackendKind kind) noexcept;

struct LlmBackend {
  std::string model_id;
  BackendKind kind = BackendKind::kMockScripted;
  std::string endpoint;  // remote_chat only
  double temperature = 0.0;
  std::size_t max_output = 256;
  // mock_scripted: field name -> reply text. mock_regex: field name -> pattern.
  std::map<std::string, std::string> script;
  // Credential lookup name; RAGSCRAPE_LLM_API_KEY_<NAME>. Defaults to model_id.
  std::string name;

  unsigned max_retries = 2;
  std::chrono::milliseconds retry_backoff{500};
  std::chrono::milliseconds timeout{60000};

  void validate() const;
  std::string api_key_env() const;
};

LlmBackend llm_backend_from_json(const nlohmann::json& j);

struct CandidateExtraction {
  std::string field;
  std::string model_id;
  std::optional<std::string> value;
  std::string raw_response;
  std::vector<RecordId> context_chunk_ids;
  bool valid = false;
};

struct AssembledContext {
  std::string context;
  std::vector<RecordId> used_ids;
};

inline constexpr std::string_view kContextSeparator = "\n---\n";

/// Joins hit texts in rank order with "\n---\n", adding whole chunks while
/// the total stays within `budget` characters. The first hit is always
/// included.
AssembledContext assemble_context(const std::vector<SearchHit>& hits, std::size_t budget);

/// Appended to every rendered prompt.
extern const std::string_view kAnswerFooter;

/// Substitutes {field_name} and {context} and appends kAnswerFooter. Any
/// other {identifier} placeholder is a TemplateError.
std::string render_prompt(const FieldSpec& spec, std::string_view context);

/// Last complete top-level JSON object embedded in `text`, if any.
std::optional<nlohmann::json> last_json_object(std::string_view text);

bool conforms_to_kind(std::string_view value, ValueKind kind);

/// Sends `prompt` to a remote chat backend and returns the first choice's
/// content. Throws LlmUnavailable after exhausting retries.
std::string chat_completion(const LlmBackend& backend, const std::string& prompt);

/// Runs one backend for one field. Model text that cannot be parsed yields
/// an invalid candidate; only transport failure throws (LlmUnavailable).
CandidateExtraction extract_field(const LlmBackend& backend, const FieldSpec& spec,
                                  std::string_view context, const std::vector<RecordId>& used_ids);

}  // namespace ragscrape
