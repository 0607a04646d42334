#include <gtest/gtest.h>

#include "fixture_config.hpp"
#include <functional>
#include <set>

#include "ragscrape/error.hpp"
#include "ragscrape/http.hpp"
#include "ragscrape/pipeline.hpp"

using namespace ragscrape;
using ragscrape::testkit::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIo;
}

nlohmann::json scripted_backend(const std::string& id, const nlohmann::json& script) {
  return {{"model_id", id}, {"kind", "mock_scripted"}, {"script", script}};
}

// Small config over pages written into `dir`.
nlohmann::json tiny_config(const TempDir& dir) {
  testkit::write_file(dir / "a.html", "<h1>Alpha page</h1><p>Price: $19.99</p><p>Colour: red</p>");
  testkit::write_file(dir / "b.html", "<h1>Beta page</h1><p>Price: $5.00</p><p>Colour: blue</p>");
  return {
      {"urls", {"a.html", "b.html"}},
      {"split", {{"max_chunk_size", 20}}},
      {"backends",
       {{{"model_id", "r1"}, {"kind", "mock_regex"}, {"script", {{"price", R"(Price:\s*(\$[0-9.]+))"}}}},
        {{"model_id", "r2"}, {"kind", "mock_regex"}, {"script", {{"price", R"(Price: (\S+))"}}}},
        {{"model_id", "r3"}, {"kind", "mock_regex"}, {"script", {{"price", R"(\$[0-9]+)"}}}}}},
      {"fields", {{{"name", "price"}, {"retrieval_query", "Price:"}, {"k", 2}}}},
  };
}

}  // namespace

TEST(Config, DefaultsAndPaths) {
  const nlohmann::json j{{"urls", {"x.html"}}, {"backends", {scripted_backend("m", nlohmann::json::object())}}};
  const auto c = config_from_json(j, "/base");
  EXPECT_EQ(c.index_path, std::filesystem::path("/base/index.rgsx"));
  EXPECT_EQ(c.output_path, std::filesystem::path("/base/output.jsonl"));
  EXPECT_EQ(c.context_budget, 8000u);
  EXPECT_TRUE(c.per_url_scope);
  EXPECT_EQ(c.split.max_chunk_size, 1000u);
  EXPECT_EQ(c.embedder.dims, 256u);
  EXPECT_EQ(c.base_dir, std::filesystem::path("/base"));
  EXPECT_EQ(c.fetch.min_host_interval.count(), 1000);

  auto k = j;
  k["base_dir"] = "pages";
  k["fetch"] = {{"timeout_s", 2.5}, {"cache_dir", "cache"}};
  const auto d = config_from_json(k, "/base");
  EXPECT_EQ(d.base_dir, std::filesystem::path("/base/pages"));
  EXPECT_EQ(d.fetch.timeout.count(), 2500);
  EXPECT_EQ(*d.fetch.cache_dir, std::filesystem::path("/base/cache"));
}

TEST(Config, Rejections) {
  const auto backend = scripted_backend("m", nlohmann::json::object());
  const nlohmann::json ok{{"urls", {"x"}}, {"backends", {backend}}};
  EXPECT_NO_THROW(config_from_json(ok, ""));

  auto j = ok;
  j["backends"] = nlohmann::json::array();
  EXPECT_EQ(code_of([&] { config_from_json(j, ""); }), ErrorCode::kInvalidConfig);
  j = ok;
  j["backends"] = {backend, backend};
  EXPECT_EQ(code_of([&] { config_from_json(j, ""); }), ErrorCode::kInvalidConfig);
  j = ok;
  j["fields"] = {{{"name", "a"}}, {{"name", "a"}}};
  EXPECT_EQ(code_of([&] { config_from_json(j, ""); }), ErrorCode::kInvalidConfig);
  j = ok;
  j["retrieval_scope"] = "everywhere";
  EXPECT_EQ(code_of([&] { config_from_json(j, ""); }), ErrorCode::kInvalidConfig);
  j = ok;
  j["split"] = {{"max_chunk_size", "big"}};
  EXPECT_EQ(code_of([&] { config_from_json(j, ""); }), ErrorCode::kInvalidConfig);
  j = ok;
  j["fetch"] = {{"max_retries", 11}};
  EXPECT_EQ(code_of([&] { config_from_json(j, ""); }), ErrorCode::kInvalidConfig);

  TempDir dir;
  testkit::write_file(dir / "bad.json", "{not json");
  EXPECT_EQ(code_of([&] { load_config(dir / "bad.json"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([&] { load_config(dir / "absent.json"); }), ErrorCode::kInvalidConfig);
}

TEST(Config, OfflineRequirements) {
  auto j = nlohmann::json{{"urls", {"x"}}, {"backends", {scripted_backend("m", nlohmann::json::object())}}};
  EXPECT_NO_THROW(enforce_offline(config_from_json(j, "")));
  http::set_offline(false);
  j["urls"] = {"https://example.com/"};
  EXPECT_EQ(code_of([&] { enforce_offline(config_from_json(j, "")); }), ErrorCode::kInvalidConfig);
  j["urls"] = {"x"};
  j["backends"] = {{{"model_id", "g"}, {"kind", "remote_chat"}, {"endpoint", "http://h/c"}}};
  EXPECT_EQ(code_of([&] { enforce_offline(config_from_json(j, "")); }), ErrorCode::kInvalidConfig);
  EXPECT_FALSE(http::offline());
}

TEST(Pipeline, IndexChunkCountMatchesIndependentSplit) {
  TempDir out;
  const auto config = config_from_json(testkit::site_config_json(out.path()), out.path());
  const IndexStats stats = cmd_index(config);
  std::size_t expected = 0;
  for (const auto& url : config.urls) {
    const std::string text = extract_text(testkit::read_file(testkit::site_dir() / url));
    expected += split_recursive(text, config.split, url).size();
  }
  EXPECT_EQ(stats.pages, config.urls.size());
  EXPECT_EQ(stats.chunks, expected);
  EXPECT_EQ(stats.dims, 256u);
  EXPECT_TRUE(stats.failures.empty());
  EXPECT_EQ(VectorStore::load(config.index_path).size(), expected);
  const auto meta = nlohmann::json::parse(testkit::read_file(index_meta_path(config.index_path)));
  EXPECT_EQ(meta.at("embedder").at("kind"), "local_ngram");
  EXPECT_EQ(meta.at("chunks"), expected);
  for (const char* stage : {"fetch", "normalize", "split", "embed", "add", "save", "total"}) {
    EXPECT_TRUE(stats.timings_ms.count(stage)) << stage;
  }
}

TEST(Pipeline, UnreachablePageIsSkipped) {
  TempDir dir;
  auto j = tiny_config(dir);
  j["urls"] = {"a.html", "gone.html", "b.html"};
  const IndexStats stats = cmd_index(config_from_json(j, dir.path()));
  EXPECT_EQ(stats.pages, 2u);
  ASSERT_EQ(stats.failures.size(), 1u);
  EXPECT_EQ(stats.failures[0].first, "gone.html");
}

TEST(Pipeline, EmptyPageGivesNoChunks) {
  TempDir dir;
  testkit::write_file(dir / "empty.html", "");
  auto j = tiny_config(dir);
  j["urls"] = {"empty.html"};
  const IndexStats stats = cmd_index(config_from_json(j, dir.path()));
  EXPECT_EQ(stats.pages, 1u);
  EXPECT_EQ(stats.chunks, 0u);
  EXPECT_EQ(VectorStore::load(dir / "index.rgsx").size(), 0u);
}

TEST(Pipeline, QueryRanksAndClamps) {
  TempDir out;
  const auto config = config_from_json(testkit::site_config_json(out.path()), out.path());
  cmd_index(config);
  const VectorStore store = VectorStore::load(config.index_path);
  const auto records = store.records();
  const DocumentRecord& target = records[records.size() / 2];
  const auto hits = cmd_query(config.index_path, target.chunk.text, 3);
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].id, target.id);
  EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
  EXPECT_EQ(cmd_query(config.index_path, "x", 100000).size(), records.size());
  for (const auto& h : cmd_query(config.index_path, "Price", 50, std::string("kettle.html"))) {
    EXPECT_EQ(h.chunk.source_url, "kettle.html");
  }
  const auto j = search_hit_to_json(hits[0]);
  EXPECT_EQ(j.at("id"), target.id);
  EXPECT_EQ(j.at("chunk").at("text"), target.chunk.text);
}

TEST(Pipeline, SharedGramsRankAbove) {
  TempDir dir;
  testkit::write_file(dir / "p.html", "<p>copper kettle boils water</p><p>xylophone</p>");
  auto j = tiny_config(dir);
  j["urls"] = {"p.html"};
  j["split"] = {{"max_chunk_size", 20}, {"delimiters", {"\n\n"}}};
  cmd_index(config_from_json(j, dir.path()));
  const auto hits = cmd_query(dir / "index.rgsx", "copper kettle", 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].chunk.text.rfind("copper", 0), 0u);
  EXPECT_GT(hits[0].score, 0.5);
  EXPECT_DOUBLE_EQ(hits[1].score, 0.0);
}

TEST(Pipeline, ExtractMajorityAndScoping) {
  TempDir dir;
  const auto config = config_from_json(tiny_config(dir), dir.path());
  const ExtractRun run = cmd_extract(config, {.reindex = true});
  ASSERT_EQ(run.records.size(), 2u);
  const auto& a = run.records[0];
  EXPECT_EQ(a.url, "a.html");
  EXPECT_EQ(a.value, "$19.99");
  EXPECT_EQ(a.decided_by, DecidedBy::kMajority);
  EXPECT_EQ(a.candidate_values.at("r3"), "$19");
  EXPECT_EQ(run.records[1].value, "$5.00");

  // Scoped retrieval: context chunks all come from the record's own page,
  // and match what a scoped query returns.
  const VectorStore store = VectorStore::load(config.index_path);
  const auto records = store.records();
  for (const auto& r : run.records) {
    const auto hits = cmd_query(config.index_path, "Price:", 2, r.url);
    ASSERT_EQ(r.chunk_ids.size(), hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_EQ(r.chunk_ids[i], hits[i].id);
      EXPECT_EQ(records[r.chunk_ids[i]].chunk.source_url, r.url);
    }
  }
  const std::string line = testkit::read_file(config.output_path);
  EXPECT_EQ(line.find("timings"), std::string::npos);
  auto timings = config.output_path;
  timings += ".timings.jsonl";
  EXPECT_NE(testkit::read_file(timings).find("retrieve"), std::string::npos);
}

TEST(Pipeline, ScriptedTwoOneDisagreement) {
  TempDir dir;
  auto j = tiny_config(dir);
  j["urls"] = {"a.html"};
  j["backends"] = {scripted_backend("s1", {{"price", "{\"value\": \"$1\"}"}}),
                   scripted_backend("s2", {{"price", "{\"value\": \"$2\"}"}}),
                   scripted_backend("s3", {{"price", "{\"value\": \"$2\"}"}})};
  const ExtractRun run = cmd_extract(config_from_json(j, dir.path()), {.reindex = true});
  ASSERT_EQ(run.records.size(), 1u);
  EXPECT_EQ(run.records[0].value, "$2");
  EXPECT_EQ(run.records[0].decided_by, DecidedBy::kMajority);
  EXPECT_EQ(run.records[0].candidate_values.at("s1"), "$1");
  ASSERT_EQ(run.results[0].votes.size(), 3u);
}

TEST(Pipeline, GlobalScopeCanCrossPages) {
  TempDir dir;
  auto j = tiny_config(dir);
  j["retrieval_scope"] = "global";
  j["fields"][0]["k"] = 50;
  const auto config = config_from_json(j, dir.path());
  const ExtractRun run = cmd_extract(config, {.reindex = true});
  const auto records = VectorStore::load(config.index_path).records();
  std::set<std::string> sources;
  for (RecordId id : run.records[0].chunk_ids) sources.insert(records[id].chunk.source_url);
  EXPECT_EQ(sources.size(), 2u);
}

TEST(Pipeline, DeterministicOutput) {
  TempDir out;
  const auto config = config_from_json(testkit::site_config_json(out.path()), out.path());
  cmd_extract(config, {.reindex = true, .jobs = 4});
  const std::string first = testkit::read_file(config.output_path);
  cmd_extract(config, {.reindex = true, .jobs = 1});
  EXPECT_EQ(testkit::read_file(config.output_path), first);
  EXPECT_FALSE(first.empty());
}

TEST(Pipeline, EmptyUrlsIsConfigError) {
  TempDir dir;
  auto j = tiny_config(dir);
  j["urls"] = nlohmann::json::array();
  const auto config = config_from_json(j, dir.path());
  EXPECT_EQ(code_of([&] { cmd_extract(config); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([&] { cmd_index(config); }), ErrorCode::kInvalidConfig);
}

TEST(Pipeline, MissingIndexIsConfigError) {
  TempDir dir;
  const auto config = config_from_json(tiny_config(dir), dir.path());
  EXPECT_EQ(code_of([&] { cmd_extract(config); }), ErrorCode::kInvalidConfig);
}

TEST(Pipeline, AllInvalidRun) {
  TempDir dir;
  auto j = tiny_config(dir);
  j["fields"] = {{{"name", "warranty"}, {"retrieval_query", "warranty"}}};
  const ExtractRun run = cmd_extract(config_from_json(j, dir.path()), {.reindex = true});
  EXPECT_TRUE(run.all_invalid());
  EXPECT_FALSE(run.records[0].value.has_value());
  EXPECT_TRUE(run.results[0].votes.empty());
}

TEST(Eval, PrecisionAndCoverage) {
  std::vector<OutputRecord> recs(4);
  recs[0] = {"u", "a", "X", DecidedBy::kMajority, {}, {}, {}};
  recs[1] = {"u", "b", "y ", DecidedBy::kMajority, {}, {}, {}};
  recs[2] = {"u", "c", "wrong", DecidedBy::kMajority, {}, {}, {}};
  recs[3] = {"u", "d", std::nullopt, DecidedBy::kAllInvalid, {}, {}, {}};
  GroundTruth truth{{"u", {{"a", "x"}, {"b", "Y"}, {"c", "z"}}}};
  EvalReport r = evaluate_records(recs, truth);
  EXPECT_NEAR(*r.overall.precision(), 0.667, 0.001);
  EXPECT_DOUBLE_EQ(r.overall.coverage(), 1.0);

  truth["u"]["d"] = "present";
  r = evaluate_records(recs, truth);
  EXPECT_EQ(r.overall.total, 4u);
  EXPECT_EQ(r.overall.attempted, 3u);
  EXPECT_NEAR(*r.overall.precision(), 0.667, 0.001);
  EXPECT_DOUBLE_EQ(r.overall.coverage(), 0.75);
  EXPECT_FALSE(r.per_field.at("d").precision().has_value());
  EXPECT_TRUE(r.to_json().at("per_field").at("d").at("precision").is_null());
}

TEST(Eval, FixtureSitePerfect) {
  TempDir out;
  const auto config = config_from_json(testkit::site_config_json(out.path()), out.path());
  const GroundTruth truth = load_ground_truth(testkit::site_dir() / "ground_truth.json");
  ExtractOptions opts;
  opts.reindex = true;
  opts.ground_truth = &truth;
  const EvalReport r = cmd_eval(config, truth, opts);
  EXPECT_EQ(r.overall.total, 40u);
  EXPECT_DOUBLE_EQ(*r.overall.precision(), 1.0);
  EXPECT_DOUBLE_EQ(r.overall.coverage(), 1.0);
}

TEST(Eval, MalformedGroundTruth) {
  TempDir dir;
  testkit::write_file(dir / "a.json", "[]");
  testkit::write_file(dir / "b.json", "{}");
  testkit::write_file(dir / "c.json", "{\"u\": {\"f\": 3}}");
  for (const char* name : {"a.json", "b.json", "c.json", "missing.json"}) {
    EXPECT_EQ(code_of([&] { load_ground_truth(dir / name); }), ErrorCode::kInvalidConfig) << name;
  }
}
