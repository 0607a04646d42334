// ragscrape: index web pages, query the index, extract fields, evaluate.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration error,
// 3 no page could be indexed, 4 every extracted field was all_invalid.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ragscrape/error.hpp"
#include "ragscrape/http.hpp"
#include "ragscrape/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNoPages = 3;
constexpr int kExitAllInvalid = 4;

int exit_code_for(const ragscrape::Error& e) {
  using ragscrape::ErrorCode;
  switch (e.code()) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kIo:
    case ErrorCode::kCorruptIndex:
    case ErrorCode::kTemplateError:
    case ErrorCode::kOfflineViolation:
      return kExitConfig;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented field extraction from web pages"};
  app.require_subcommand(1);

  std::string config_path;
  std::size_t jobs = 1;
  bool offline = false;
  bool reindex = false;

  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "Pipeline config (JSON)");
    if (config_required) opt->required();
    sub->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
    sub->add_flag("--offline", offline, "Forbid all network I/O");
  };

  auto* index_cmd = app.add_subcommand("index", "Fetch, chunk, embed and index the configured URLs");
  add_common(index_cmd, true);

  std::string query_text;
  std::string index_override;
  std::optional<std::string> scope_url;
  std::size_t k = 5;
  auto* query_cmd = app.add_subcommand("query", "Print the top-k chunks for a query as JSONL");
  add_common(query_cmd, false);
  query_cmd->add_option("--text,-q", query_text, "Query text")->required();
  query_cmd->add_option("-k", k, "Number of hits")->check(CLI::PositiveNumber);
  query_cmd->add_option("--index", index_override, "Index file (defaults to the config's index_path)");
  query_cmd->add_option("--url", scope_url, "Restrict to chunks from this source URL");

  auto* extract_cmd = app.add_subcommand("extract", "Extract every configured field from every URL");
  add_common(extract_cmd, true);
  extract_cmd->add_flag("--reindex", reindex, "Rebuild the index first");

  std::string truth_path;
  auto* eval_cmd = app.add_subcommand("eval", "Extract in evaluation mode and report precision/coverage");
  add_common(eval_cmd, true);
  eval_cmd->add_flag("--reindex", reindex, "Rebuild the index first");
  eval_cmd->add_option("--ground-truth", truth_path, "Ground truth JSON {url: {field: value}}")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (query_cmd->parsed()) {
      std::filesystem::path index_path = index_override;
      if (index_path.empty()) {
        if (config_path.empty()) {
          std::cerr << "ragscrape: query needs --index or --config\n";
          return kExitConfig;
        }
        index_path = ragscrape::load_config(config_path).index_path;
      }
      if (offline) ragscrape::http::set_offline(true);
      if (!std::filesystem::exists(index_path)) {
        std::cerr << "ragscrape: index not found: " << index_path << "\n";
        return kExitConfig;
      }
      for (const auto& hit : ragscrape::cmd_query(index_path, query_text, k, scope_url)) {
        std::cout << ragscrape::search_hit_to_json(hit).dump() << "\n";
      }
      return 0;
    }

    const ragscrape::PipelineConfig config = ragscrape::load_config(config_path);
    if (offline) ragscrape::enforce_offline(config);

    if (index_cmd->parsed()) {
      const auto stats = ragscrape::cmd_index(config, jobs);
      std::cout << stats.to_json().dump() << "\n";
      return stats.pages == 0 ? kExitNoPages : 0;
    }

    ragscrape::ExtractOptions options;
    options.reindex = reindex;
    options.jobs = jobs;

    if (extract_cmd->parsed()) {
      const auto run = ragscrape::cmd_extract(config, options);
      if (run.index_stats && run.index_stats->pages == 0) return kExitNoPages;
      std::cerr << "ragscrape: wrote " << run.records.size() << " records to " << config.output_path.string()
                << "\n";
      return run.all_invalid() ? kExitAllInvalid : 0;
    }

    if (eval_cmd->parsed()) {
      const auto truth = ragscrape::load_ground_truth(truth_path);
      const auto report = ragscrape::cmd_eval(config, truth, options);
      std::cout << report.to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const ragscrape::Error& e) {
    std::cerr << "ragscrape: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "ragscrape: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
