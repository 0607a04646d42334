#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragscrape/chunker.hpp"
#include "ragscrape/embedder.hpp"
#include "ragscrape/ensemble.hpp"
#include "ragscrape/extraction.hpp"
#include "ragscrape/ingest.hpp"
#include "ragscrape/vector_store.hpp"

namespace ragscrape {

/// Everything a pipeline run needs. See docs/config.md for the JSON schema.
struct PipelineConfig {
  std::vector<std::string> urls;
  FetchPolicy fetch;
  SplitConfig split = default_split_config();
  TextMode text_mode = TextMode::kExtractedText;
  EmbedderSpec embedder;
  std::vector<LlmBackend> backends;  // list order is tie-break priority
  std::vector<FieldSpec> fields;
  std::size_t context_budget = 8000;
  std::filesystem::path index_path;
  std::filesystem::path output_path;
  bool per_url_scope = true;
  VoteWeights vote_weights;
  // Relative local page paths resolve against this directory. Defaults to
  // the config file's directory; "base_dir" in the JSON overrides it.
  std::filesystem::path base_dir;

  void validate() const;
  std::vector<std::string> priority() const;
};

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// Reads and validates a config file. Relative paths inside it resolve
/// against the file's directory. Throws Error{kInvalidConfig}.
PipelineConfig load_config(const std::filesystem::path& path);

/// Rejects configs that would need the network, then turns on the global
/// offline guard.
void enforce_offline(const PipelineConfig& config);

struct IndexStats {
  std::size_t pages = 0;
  std::size_t chunks = 0;
  std::size_t dims = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // url, reason
  std::map<std::string, double> timings_ms;

  nlohmann::json to_json() const;
};

/// Fetch, normalize, split, embed and store every configured URL, then
/// save the index and its metadata sidecar. Per-URL failures are recorded
/// and skipped.
IndexStats cmd_index(const PipelineConfig& config, std::size_t jobs = 1);

/// Sidecar describing how an index was built: "{index}.meta.json".
std::filesystem::path index_meta_path(const std::filesystem::path& index_path);
EmbedderSpec load_index_embedder(const std::filesystem::path& index_path);

/// Top-k hits for `query`, embedded with the index's recorded embedder.
/// `scope_url` restricts the search to one page's chunks.
std::vector<SearchHit> cmd_query(const std::filesystem::path& index_path, const std::string& query,
                                 std::size_t k, const std::optional<std::string>& scope_url = std::nullopt);

nlohmann::json search_hit_to_json(const SearchHit& hit);

struct OutputRecord {
  std::string url;
  std::string field;
  std::optional<std::string> value;
  DecidedBy decided_by = DecidedBy::kAllInvalid;
  std::map<std::string, std::optional<std::string>> candidate_values;
  std::vector<RecordId> chunk_ids;
  std::map<std::string, double> timings_ms;

  /// Timings are left out so output files compare byte-for-byte.
  nlohmann::json to_json(bool with_timings = false) const;
};

/// url -> field -> expected value.
using GroundTruth = std::map<std::string, std::map<std::string, std::string>>;

GroundTruth load_ground_truth(const std::filesystem::path& path);

struct ExtractOptions {
  bool reindex = false;
  std::size_t jobs = 1;
  const GroundTruth* ground_truth = nullptr;  // enables the accuracy factor
};

struct ExtractRun {
  std::vector<OutputRecord> records;  // sorted by (url, field)
  std::vector<ExtractionResult> results;  // aligned with records
  std::optional<IndexStats> index_stats;

  bool all_invalid() const;
};

/// Retrieval, per-backend extraction and ensemble voting for every
/// (url, field). Writes JSONL to config.output_path and per-record stage
/// timings to "{output}.timings.jsonl".
ExtractRun cmd_extract(const PipelineConfig& config, const ExtractOptions& options = {});

struct EvalMetrics {
  std::size_t total = 0;
  std::size_t attempted = 0;
  std::size_t correct = 0;

  std::optional<double> precision() const;
  double coverage() const;
  nlohmann::json to_json() const;
};

struct EvalReport {
  EvalMetrics overall;
  std::map<std::string, EvalMetrics> per_field;
  nlohmann::json to_json() const;
};

/// Runs extraction in evaluation mode and scores it against `truth`.
EvalReport cmd_eval(const PipelineConfig& config, const GroundTruth& truth, const ExtractOptions& options = {});

/// Scoring only, for already-produced records.
EvalReport evaluate_records(const std::vector<OutputRecord>& records, const GroundTruth& truth);

}  // namespace ragscrape
