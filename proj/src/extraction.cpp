#include "ragscrape/extraction.hpp"

#include <cctype>
#include <cstdlib>
#include <regex>
#include <thread>

#include "ragscrape/error.hpp"
#include "ragscrape/http.hpp"
#include "ragscrape/unicode.hpp"

namespace ragscrape {

const std::string_view kAnswerFooter =
    "\n\nRespond with exactly one JSON object of the form {\"value\": <string or null>} "
    "and nothing else. Use null if the context does not contain the answer.";

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

bool is_field_name(std::string_view s) {
  if (s.empty() || s[0] < 'a' || s[0] > 'z') return false;
  for (char c : s) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Index one past the '}' that balances the '{' at `open`, honoring JSON
// string escapes; npos if unbalanced.
std::size_t balanced_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::string mock_reply(const LlmBackend& backend, const FieldSpec& spec, std::string_view context) {
  const auto it = backend.script.find(spec.name);
  if (backend.kind == BackendKind::kMockScripted) {
    return it == backend.script.end() ? std::string{} : it->second;
  }
  if (it == backend.script.end()) return R"({"value": null})";
  const std::regex pattern(it->second, std::regex::ECMAScript);
  const std::string haystack(context);
  std::smatch match;
  if (!std::regex_search(haystack, match, pattern)) return R"({"value": null})";
  const std::string found = match.size() > 1 && match[1].matched ? match[1].str() : match[0].str();
  return nlohmann::json{{"value", found}}.dump();
}

}  // namespace

std::string_view value_kind_name(ValueKind kind) noexcept {
  switch (kind) {
    case ValueKind::kText: return "text";
    case ValueKind::kNumber: return "number";
    case ValueKind::kUrl: return "url";
  }
  return "text";
}

ValueKind value_kind_from_name(std::string_view name) {
  if (name == "text") return ValueKind::kText;
  if (name == "number") return ValueKind::kNumber;
  if (name == "url") return ValueKind::kUrl;
  throw Error(ErrorCode::kInvalidConfig, "unknown value_kind: " + std::string(name));
}

std::string_view backend_kind_name(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::kRemoteChat: return "remote_chat";
    case BackendKind::kMockScripted: return "mock_scripted";
    case BackendKind::kMockRegex: return "mock_regex";
  }
  return "mock_scripted";
}

void FieldSpec::validate() const {
  if (!is_field_name(name)) throw Error(ErrorCode::kInvalidConfig, "invalid field name: '" + name + "'");
  if (k == 0) throw Error(ErrorCode::kInvalidConfig, "field " + name + ": k must be positive");
  if (count_occurrences(prompt_template, "{context}") != 1) {
    throw Error(ErrorCode::kInvalidConfig, "field " + name + ": template must contain {context} exactly once");
  }
  if (count_occurrences(prompt_template, "{field_name}") == 0) {
    throw Error(ErrorCode::kInvalidConfig, "field " + name + ": template must contain {field_name}");
  }
}

void LlmBackend::validate() const {
  if (model_id.empty()) throw Error(ErrorCode::kInvalidConfig, "backend model_id is empty");
  if (kind == BackendKind::kRemoteChat && endpoint.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "remote_chat backend " + model_id + " needs an endpoint");
  }
  if (temperature < 0.0) throw Error(ErrorCode::kInvalidConfig, "temperature must be >= 0");
  if (max_output == 0) throw Error(ErrorCode::kInvalidConfig, "max_output must be positive");
  if (kind == BackendKind::kMockRegex) {
    for (const auto& [field, pattern] : script) {
      try {
        std::regex check(pattern, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw Error(ErrorCode::kInvalidConfig, "bad regex for " + field + ": " + e.what());
      }
    }
  }
}

std::string LlmBackend::api_key_env() const {
  std::string out = "RAGSCRAPE_LLM_API_KEY_";
  for (char c : name.empty() ? model_id : name) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c))
                      ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : '_');
  }
  return out;
}

LlmBackend llm_backend_from_json(const nlohmann::json& j) {
  LlmBackend b;
  b.model_id = j.at("model_id").get<std::string>();
  const std::string kind = j.value("kind", "mock_scripted");
  if (kind == "remote_chat") {
    b.kind = BackendKind::kRemoteChat;
  } else if (kind == "mock_scripted") {
    b.kind = BackendKind::kMockScripted;
  } else if (kind == "mock_regex") {
    b.kind = BackendKind::kMockRegex;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown backend kind: " + kind);
  }
  b.endpoint = j.value("endpoint", "");
  b.temperature = j.value("temperature", 0.0);
  b.max_output = j.value("max_output", b.max_output);
  b.name = j.value("name", b.model_id);
  b.max_retries = j.value("max_retries", b.max_retries);
  b.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", b.retry_backoff.count()));
  b.timeout = std::chrono::milliseconds(j.value("timeout_ms", b.timeout.count()));
  if (j.contains("script")) b.script = j["script"].get<std::map<std::string, std::string>>();
  b.validate();
  return b;
}

AssembledContext assemble_context(const std::vector<SearchHit>& hits, std::size_t budget) {
  AssembledContext out;
  const std::size_t sep_len = unicode::char_length(kContextSeparator);
  std::size_t used = 0;
  for (const auto& hit : hits) {
    const std::size_t len = unicode::char_length(hit.chunk.text);
    if (out.used_ids.empty()) {
      out.context = hit.chunk.text;
      used = len;
    } else {
      if (used + sep_len + len > budget) break;
      out.context.append(kContextSeparator);
      out.context.append(hit.chunk.text);
      used += sep_len + len;
    }
    out.used_ids.push_back(hit.id);
  }
  return out;
}

std::string render_prompt(const FieldSpec& spec, std::string_view context) {
  const std::string_view tpl = spec.prompt_template;
  std::string out;
  out.reserve(tpl.size() + context.size() + kAnswerFooter.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    const std::size_t open = tpl.find('{', i);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(i));
      break;
    }
    out.append(tpl.substr(i, open - i));
    const std::size_t close = tpl.find('}', open + 1);
    const std::string_view name =
        close == std::string_view::npos ? std::string_view{} : tpl.substr(open + 1, close - open - 1);
    if (!is_identifier(name)) {
      out.push_back('{');
      i = open + 1;
      continue;
    }
    if (name == "field_name") {
      out.append(spec.name);
    } else if (name == "context") {
      out.append(context);
    } else {
      throw Error(ErrorCode::kTemplateError, "unknown placeholder {" + std::string(name) + "}");
    }
    i = close + 1;
  }
  out.append(kAnswerFooter);
  return out;
}

std::optional<nlohmann::json> last_json_object(std::string_view text) {
  std::optional<nlohmann::json> last;
  std::size_t i = 0;
  while ((i = text.find('{', i)) != std::string_view::npos) {
    const std::size_t end = balanced_end(text, i);
    if (end != std::string_view::npos) {
      auto parsed = nlohmann::json::parse(text.substr(i, end - i), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) {
        last = std::move(parsed);
        i = end;
        continue;
      }
    }
    ++i;
  }
  return last;
}

bool conforms_to_kind(std::string_view value, ValueKind kind) {
  const std::string_view v = trim(value);
  if (v.empty()) return false;
  switch (kind) {
    case ValueKind::kText:
      return true;
    case ValueKind::kNumber: {
      static const std::regex kDecimal(R"([+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)");
      return std::regex_match(v.begin(), v.end(), kDecimal);
    }
    case ValueKind::kUrl: {
      static const std::regex kAbsoluteUrl(R"([A-Za-z][A-Za-z0-9+.\-]*://[^\s/?#]+[^\s]*)");
      return std::regex_match(v.begin(), v.end(), kAbsoluteUrl);
    }
  }
  return false;
}

std::string chat_completion(const LlmBackend& backend, const std::string& prompt) {
  http::Request req;
  req.method = "POST";
  req.url = backend.endpoint;
  req.timeout = backend.timeout;
  req.body = nlohmann::json{{"model", backend.model_id},
                            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                            {"temperature", backend.temperature},
                            {"max_tokens", backend.max_output}}
                 .dump();
  if (const char* key = std::getenv(backend.api_key_env().c_str()); key && *key) {
    req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  std::string last_error;
  for (unsigned attempt = 0; attempt <= backend.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(backend.retry_backoff * (1u << (attempt - 1)));
    const http::Response resp = http::send(req);
    if (resp.failure != http::Failure::kNone) {
      last_error = resp.error;
      continue;
    }
    if (resp.status >= 500 || resp.status == 429) {
      last_error = "HTTP " + std::to_string(resp.status);
      continue;
    }
    if (resp.status != 200) {
      throw Error(ErrorCode::kLlmUnavailable, backend.model_id + ": HTTP " + std::to_string(resp.status));
    }
    const auto body = nlohmann::json::parse(resp.body, nullptr, false);
    try {
      return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kLlmUnavailable, backend.model_id + ": malformed chat response");
    }
  }
  throw Error(ErrorCode::kLlmUnavailable, backend.model_id + ": " + last_error);
}

CandidateExtraction extract_field(const LlmBackend& backend, const FieldSpec& spec,
                                  std::string_view context, const std::vector<RecordId>& used_ids) {
  CandidateExtraction c;
  c.field = spec.name;
  c.model_id = backend.model_id;
  c.context_chunk_ids = used_ids;
  const std::string prompt = render_prompt(spec, context);
  c.raw_response = backend.kind == BackendKind::kRemoteChat ? chat_completion(backend, prompt)
                                                            : mock_reply(backend, spec, context);

  const auto obj = last_json_object(c.raw_response);
  if (!obj || !obj->contains("value")) return c;
  const auto& value = (*obj)["value"];
  if (value.is_string()) {
    c.value = value.get<std::string>();
  } else if (value.is_number()) {
    c.value = value.dump();
  } else {
    return c;
  }
  c.valid = conforms_to_kind(*c.value, spec.value_kind);
  return c;
}

}  // namespace ragscrape
