#include "ragscrape/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>

#include "ragscrape/error.hpp"
#include "ragscrape/http.hpp"
#include "ragscrape/parallel.hpp"

namespace ragscrape {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr const char* kDefaultPromptTemplate =
    "Extract the {field_name} from the following web page content.\n\n{context}";

bool is_remote_url(const std::string& url) {
  http::Url parsed;
  return http::Url::parse(url, parsed);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

FieldSpec field_from_json(const nlohmann::json& j) {
  FieldSpec f;
  f.name = j.at("name").get<std::string>();
  f.retrieval_query = j.value("retrieval_query", f.name);
  f.prompt_template = j.value("prompt_template", std::string(kDefaultPromptTemplate));
  f.k = j.value("k", f.k);
  f.value_kind = value_kind_from_name(j.value("value_kind", "text"));
  f.validate();
  return f;
}

FetchPolicy fetch_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  FetchPolicy p;
  p.respect_robots = j.value("respect_robots", p.respect_robots);
  p.timeout = std::chrono::milliseconds(
      static_cast<long long>(j.value("timeout_s", p.timeout.count() / 1000.0) * 1000.0));
  p.max_retries = j.value("max_retries", p.max_retries);
  p.user_agent = j.value("user_agent", p.user_agent);
  if (j.contains("cache_dir") && !j["cache_dir"].is_null()) {
    p.cache_dir = resolve(base, j["cache_dir"].get<std::string>());
  }
  p.min_host_interval = std::chrono::milliseconds(j.value("min_host_interval_ms", p.min_host_interval.count()));
  p.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", p.retry_backoff.count()));
  p.validate();
  return p;
}

}  // namespace

void PipelineConfig::validate() const {
  fetch.validate();
  split.validate();
  embedder.validate();
  if (backends.empty()) throw Error(ErrorCode::kInvalidConfig, "at least one backend is required");
  std::set<std::string> models;
  for (const auto& b : backends) {
    b.validate();
    if (!models.insert(b.model_id).second) {
      throw Error(ErrorCode::kInvalidConfig, "duplicate backend model_id: " + b.model_id);
    }
  }
  std::set<std::string> names;
  for (const auto& f : fields) {
    f.validate();
    if (!names.insert(f.name).second) throw Error(ErrorCode::kInvalidConfig, "duplicate field: " + f.name);
  }
  if (context_budget == 0) throw Error(ErrorCode::kInvalidConfig, "context_budget must be positive");
  if (index_path.empty()) throw Error(ErrorCode::kInvalidConfig, "index_path is required");
}

std::vector<std::string> PipelineConfig::priority() const {
  std::vector<std::string> out;
  for (const auto& b : backends) out.push_back(b.model_id);
  return out;
}

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    c.base_dir = base_dir;
    if (j.contains("base_dir")) c.base_dir = resolve(base_dir, j["base_dir"].get<std::string>());
    c.urls = j.value("urls", std::vector<std::string>{});
    if (j.contains("fetch")) c.fetch = fetch_from_json(j["fetch"], base_dir);
    if (j.contains("split")) {
      const auto& s = j["split"];
      c.split.delimiters = s.value("delimiters", c.split.delimiters);
      c.split.max_chunk_size = s.value("max_chunk_size", c.split.max_chunk_size);
    }
    c.text_mode = text_mode_from_name(j.value("text_mode", "extracted_text"));
    if (j.contains("embedder")) c.embedder = embedder_spec_from_json(j["embedder"]);
    for (const auto& b : j.value("backends", nlohmann::json::array())) c.backends.push_back(llm_backend_from_json(b));
    for (const auto& f : j.value("fields", nlohmann::json::array())) c.fields.push_back(field_from_json(f));
    c.context_budget = j.value("context_budget", c.context_budget);
    c.index_path = resolve(base_dir, j.value("index_path", "index.rgsx"));
    c.output_path = resolve(base_dir, j.value("output_path", "output.jsonl"));
    const std::string scope = j.value("retrieval_scope", "per_url");
    if (scope != "per_url" && scope != "global") {
      throw Error(ErrorCode::kInvalidConfig, "retrieval_scope must be per_url or global");
    }
    c.per_url_scope = scope == "per_url";
    if (j.contains("vote_weights")) {
      const auto& w = j["vote_weights"];
      c.vote_weights.frequency = w.value("frequency", c.vote_weights.frequency);
      c.vote_weights.quality = w.value("quality", c.vote_weights.quality);
      c.vote_weights.accuracy = w.value("accuracy", c.vote_weights.accuracy);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, "config is not a JSON object: " + path.string());
  }
  return config_from_json(j, path.parent_path());
}

void enforce_offline(const PipelineConfig& config) {
  if (config.embedder.kind != EmbedderKind::kLocalNgram) {
    throw Error(ErrorCode::kInvalidConfig, "--offline requires the local_ngram embedder");
  }
  for (const auto& b : config.backends) {
    if (b.kind == BackendKind::kRemoteChat) {
      throw Error(ErrorCode::kInvalidConfig, "--offline forbids remote backend " + b.model_id);
    }
  }
  for (const auto& u : config.urls) {
    if (is_remote_url(u)) throw Error(ErrorCode::kInvalidConfig, "--offline forbids remote URL " + u);
  }
  http::set_offline(true);
}

nlohmann::json IndexStats::to_json() const {
  nlohmann::json failed = nlohmann::json::array();
  for (const auto& [url, why] : failures) failed.push_back({{"url", url}, {"error", why}});
  return {{"pages", pages}, {"chunks", chunks}, {"dims", dims}, {"failed", failed}, {"timings_ms", timings_ms}};
}

std::filesystem::path index_meta_path(const std::filesystem::path& index_path) {
  auto p = index_path;
  p += ".meta.json";
  return p;
}

IndexStats cmd_index(const PipelineConfig& config, std::size_t jobs) {
  if (config.urls.empty()) throw Error(ErrorCode::kInvalidConfig, "urls list is empty");
  const auto start = Clock::now();

  struct PageWork {
    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> embeddings;
    std::optional<std::string> error;
    double fetch_ms = 0, normalize_ms = 0, split_ms = 0, embed_ms = 0;
  };
  std::vector<PageWork> work(config.urls.size());
  HttpFetcher fetcher(config.fetch);

  parallel_for(config.urls.size(), jobs, [&](std::size_t i) {
    const std::string& url = config.urls[i];
    PageWork& w = work[i];
    try {
      auto t = Clock::now();
      RawPage page = fetcher.fetch(is_remote_url(url) ? url : resolve(config.base_dir, url).string());
      page.url = url;
      w.fetch_ms = ms_since(t);

      t = Clock::now();
      const NormalizedText text = html_to_text(page, config.text_mode);
      w.normalize_ms = ms_since(t);

      t = Clock::now();
      w.chunks = split_recursive(text.text, config.split, url);
      w.split_ms = ms_since(t);

      t = Clock::now();
      if (!w.chunks.empty()) {
        std::vector<std::string> texts;
        texts.reserve(w.chunks.size());
        for (const auto& c : w.chunks) texts.push_back(c.text);
        w.embeddings = embed_batch(texts, config.embedder);
      }
      w.embed_ms = ms_since(t);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kOfflineViolation || e.code() == ErrorCode::kInvalidConfig) throw;
      w.error = e.what();
    }
  });

  IndexStats stats;
  VectorStore store;
  const auto add_start = Clock::now();
  for (std::size_t i = 0; i < work.size(); ++i) {
    PageWork& w = work[i];
    stats.timings_ms["fetch"] += w.fetch_ms;
    stats.timings_ms["normalize"] += w.normalize_ms;
    stats.timings_ms["split"] += w.split_ms;
    stats.timings_ms["embed"] += w.embed_ms;
    if (w.error) {
      std::cerr << "ragscrape: skipping " << config.urls[i] << ": " << *w.error << "\n";
      stats.failures.emplace_back(config.urls[i], *w.error);
      continue;
    }
    ++stats.pages;
    for (std::size_t c = 0; c < w.chunks.size(); ++c) {
      store.add(std::move(w.chunks[c]), std::move(w.embeddings[c]));
      ++stats.chunks;
    }
  }
  stats.timings_ms["add"] = ms_since(add_start);
  stats.dims = store.size() > 0 ? store.dims() : config.embedder.dims;

  const auto save_start = Clock::now();
  if (config.index_path.has_parent_path()) std::filesystem::create_directories(config.index_path.parent_path());
  store.save(config.index_path);
  nlohmann::json meta{{"embedder", embedder_spec_to_json(config.embedder)},
                      {"text_mode", text_mode_name(config.text_mode)},
                      {"split", {{"delimiters", config.split.delimiters},
                                 {"max_chunk_size", config.split.max_chunk_size}}},
                      {"pages", stats.pages},
                      {"chunks", stats.chunks}};
  write_text_file(index_meta_path(config.index_path), meta.dump(2) + "\n");
  stats.timings_ms["save"] = ms_since(save_start);
  stats.timings_ms["total"] = ms_since(start);
  return stats;
}

EmbedderSpec load_index_embedder(const std::filesystem::path& index_path) {
  const auto meta_path = index_meta_path(index_path);
  std::ifstream in(meta_path);
  if (!in) throw Error(ErrorCode::kIo, "missing index metadata " + meta_path.string());
  const auto meta = nlohmann::json::parse(in, nullptr, false);
  if (meta.is_discarded() || !meta.contains("embedder")) {
    throw Error(ErrorCode::kCorruptIndex, "bad index metadata " + meta_path.string());
  }
  return embedder_spec_from_json(meta["embedder"]);
}

std::vector<SearchHit> cmd_query(const std::filesystem::path& index_path, const std::string& query,
                                 std::size_t k, const std::optional<std::string>& scope_url) {
  const VectorStore store = VectorStore::load(index_path);
  const EmbedderSpec spec = load_index_embedder(index_path);
  const EmbeddingVector q = embed_text(query, spec);
  if (!scope_url) return store.search(q, k);
  return store.search(q, k, [&](const DocumentRecord& r) { return r.chunk.source_url == *scope_url; });
}

nlohmann::json search_hit_to_json(const SearchHit& hit) {
  return {{"id", hit.id}, {"score", hit.score}, {"chunk", chunk_to_json(hit.chunk)}};
}

nlohmann::json OutputRecord::to_json(bool with_timings) const {
  nlohmann::json candidates = nlohmann::json::object();
  for (const auto& [model, v] : candidate_values) {
    candidates[model] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  nlohmann::json j{{"url", url},
                   {"field", field},
                   {"value", value ? nlohmann::json(*value) : nlohmann::json(nullptr)},
                   {"decided_by", decided_by_name(decided_by)},
                   {"candidate_values", candidates},
                   {"chunk_ids", chunk_ids}};
  if (with_timings) j["timings_ms"] = timings_ms;
  return j;
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, "ground truth must be a JSON object: " + path.string());
  }
  GroundTruth truth;
  for (const auto& [url, fields] : j.items()) {
    if (!fields.is_object()) throw Error(ErrorCode::kInvalidConfig, "ground truth for " + url + " is not an object");
    for (const auto& [field, value] : fields.items()) {
      if (!value.is_string()) {
        throw Error(ErrorCode::kInvalidConfig, "ground truth " + url + "/" + field + " is not a string");
      }
      truth[url][field] = value.get<std::string>();
    }
  }
  std::size_t pairs = 0;
  for (const auto& [url, fields] : truth) pairs += fields.size();
  if (pairs == 0) throw Error(ErrorCode::kInvalidConfig, "ground truth has no (url, field) entries");
  return truth;
}

bool ExtractRun::all_invalid() const {
  return std::all_of(records.begin(), records.end(),
                     [](const OutputRecord& r) { return r.decided_by == DecidedBy::kAllInvalid; });
}

ExtractRun cmd_extract(const PipelineConfig& config, const ExtractOptions& options) {
  if (config.urls.empty()) throw Error(ErrorCode::kInvalidConfig, "urls list is empty");
  if (config.fields.empty()) throw Error(ErrorCode::kInvalidConfig, "fields list is empty");
  ExtractRun run;
  if (options.reindex) run.index_stats = cmd_index(config, options.jobs);

  VectorStore store;
  try {
    store = VectorStore::load(config.index_path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw Error(ErrorCode::kInvalidConfig, "cannot load index: " + std::string(e.what()));
    throw;
  }
  const EmbedderSpec embedder = load_index_embedder(config.index_path);
  const auto priority = config.priority();

  std::vector<std::string> urls = config.urls;
  std::sort(urls.begin(), urls.end());
  urls.erase(std::unique(urls.begin(), urls.end()), urls.end());
  std::vector<const FieldSpec*> fields;
  for (const auto& f : config.fields) fields.push_back(&f);
  std::sort(fields.begin(), fields.end(), [](auto* a, auto* b) { return a->name < b->name; });

  std::vector<EmbeddingVector> queries;
  for (const FieldSpec* f : fields) queries.push_back(embed_text(f->retrieval_query, embedder));

  const std::size_t total = urls.size() * fields.size();
  run.records.resize(total);
  run.results.resize(total);

  parallel_for(total, options.jobs, [&](std::size_t n) {
    const std::string& url = urls[n / fields.size()];
    const std::size_t fi = n % fields.size();
    const FieldSpec& field = *fields[fi];
    OutputRecord& rec = run.records[n];
    rec.url = url;
    rec.field = field.name;

    auto t = Clock::now();
    const auto hits = config.per_url_scope
                          ? store.search(queries[fi], field.k,
                                         [&](const DocumentRecord& r) { return r.chunk.source_url == url; })
                          : store.search(queries[fi], field.k);
    const AssembledContext ctx = assemble_context(hits, config.context_budget);
    rec.timings_ms["retrieve"] = ms_since(t);

    t = Clock::now();
    std::vector<CandidateExtraction> candidates;
    for (const auto& backend : config.backends) {
      try {
        candidates.push_back(extract_field(backend, field, ctx.context, ctx.used_ids));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kLlmUnavailable) throw;
        std::cerr << "ragscrape: " << e.what() << "\n";
        CandidateExtraction failed;
        failed.field = field.name;
        failed.model_id = backend.model_id;
        failed.context_chunk_ids = ctx.used_ids;
        candidates.push_back(std::move(failed));
      }
    }
    rec.timings_ms["extract"] = ms_since(t);

    t = Clock::now();
    std::optional<std::string> truth;
    if (options.ground_truth) {
      if (const auto u = options.ground_truth->find(url); u != options.ground_truth->end()) {
        if (const auto f = u->second.find(field.name); f != u->second.end()) truth = f->second;
      }
    }
    const auto scores = score_candidates(candidates, truth);
    std::vector<VoteRecord> votes;
    const bool any_valid =
        std::any_of(candidates.begin(), candidates.end(), [](const auto& c) { return c.valid; });
    if (any_valid) {
      for (const auto& judge : config.backends) {
        votes.push_back(judge_vote(judge, candidates, scores, priority, config.vote_weights));
      }
    }
    ExtractionResult result = tally_votes(votes, candidates, priority);
    rec.timings_ms["vote"] = ms_since(t);

    rec.value = result.final_value;
    rec.decided_by = result.decided_by;
    for (const auto& c : candidates) rec.candidate_values[c.model_id] = c.value;
    rec.chunk_ids = ctx.used_ids;
    run.results[n] = std::move(result);
  });

  std::string out, timings;
  for (const auto& r : run.records) {
    out += r.to_json().dump() + "\n";
    timings += nlohmann::json{{"url", r.url}, {"field", r.field}, {"timings_ms", r.timings_ms}}.dump() + "\n";
  }
  write_text_file(config.output_path, out);
  auto timings_path = config.output_path;
  timings_path += ".timings.jsonl";
  write_text_file(timings_path, timings);
  return run;
}

std::optional<double> EvalMetrics::precision() const {
  if (attempted == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(attempted);
}

double EvalMetrics::coverage() const {
  return total == 0 ? 0.0 : static_cast<double>(attempted) / static_cast<double>(total);
}

nlohmann::json EvalMetrics::to_json() const {
  const auto p = precision();
  return {{"precision", p ? nlohmann::json(*p) : nlohmann::json(nullptr)},
          {"coverage", coverage()},
          {"correct", correct},
          {"attempted", attempted},
          {"total", total}};
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json fields = nlohmann::json::object();
  for (const auto& [name, m] : per_field) fields[name] = m.to_json();
  return {{"overall", overall.to_json()}, {"per_field", fields}};
}

EvalReport evaluate_records(const std::vector<OutputRecord>& records, const GroundTruth& truth) {
  EvalReport report;
  for (const auto& [url, fields] : truth) {
    for (const auto& [field, expected] : fields) {
      EvalMetrics& m = report.per_field[field];
      ++m.total;
      ++report.overall.total;
      const auto it = std::find_if(records.begin(), records.end(),
                                   [&](const OutputRecord& r) { return r.url == url && r.field == field; });
      if (it == records.end() || !it->value) continue;
      ++m.attempted;
      ++report.overall.attempted;
      if (normalize_value(*it->value).norm == normalize_value(expected).norm) {
        ++m.correct;
        ++report.overall.correct;
      }
    }
  }
  return report;
}

EvalReport cmd_eval(const PipelineConfig& config, const GroundTruth& truth, const ExtractOptions& options) {
  ExtractOptions eval_options = options;
  eval_options.ground_truth = &truth;
  const ExtractRun run = cmd_extract(config, eval_options);
  return evaluate_records(run.records, truth);
}

}  // namespace ragscrape
