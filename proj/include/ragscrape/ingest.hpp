#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace ragscrape {

struct FetchPolicy {
  bool respect_robots = true;
  std::chrono::milliseconds timeout{30000};
  unsigned max_retries = 2;
  std::string user_agent = "ragscrape/0.1";
  std::optional<std::filesystem::path> cache_dir;
  std::chrono::milliseconds min_host_interval{1000};
  std::chrono::milliseconds retry_backoff{500};

  /// timeout > 0, max_retries <= 10.
  void validate() const;
};

struct RawPage {
  std::string url;
  int status = 0;  // 0 for local files
  std::string html;  // valid UTF-8
  std::chrono::system_clock::time_point fetched_at;
  bool decode_lossy = false;
};

enum class TextMode { kExtractedText, kRawHtml };

struct NormalizedText {
  std::string source_url;
  std::string text;
  TextMode mode = TextMode::kExtractedText;
};

/// Raw mode returns the page untouched. Extracted mode drops
/// script/style/noscript/head/comments, decodes entities, ends every
/// block-level element with "\n\n", collapses whitespace outside <pre>,
/// keeps alt/title attribute text, and trims the final separator.
NormalizedText html_to_text(const RawPage& page, TextMode mode = TextMode::kExtractedText);

/// The extracted-text transformation on a bare HTML string.
std::string extract_text(std::string_view html);

std::string_view text_mode_name(TextMode mode) noexcept;
TextMode text_mode_from_name(std::string_view name);

/// Source of pages. The HTTP implementation fetches static HTML; a
/// rendering backend can implement the same interface.
class PageFetcher {
 public:
  virtual ~PageFetcher() = default;
  virtual RawPage fetch(const std::string& url) = 0;
};

/// HTTP(S) and local-file fetcher with robots.txt, per-host pacing, retries
/// and an on-disk cache. Safe to share between threads.
class HttpFetcher final : public PageFetcher {
 public:
  explicit HttpFetcher(FetchPolicy policy);
  RawPage fetch(const std::string& url) override;

  const FetchPolicy& policy() const noexcept { return policy_; }

 private:
  bool robots_allows(const std::string& origin, const std::string& target);

  FetchPolicy policy_;
  std::mutex robots_mu_;
  std::map<std::string, std::shared_ptr<const class RobotsRules>> robots_;
};

/// One-shot fetch. Errors: RobotsDisallowed, FetchFailed{status}, Timeout,
/// NotFound (missing local file).
RawPage fetch_page(const std::string& url, const FetchPolicy& policy);

/// "{cache_dir}/{sha256(url) hex}.html"
std::filesystem::path cache_path_for(const std::filesystem::path& cache_dir, std::string_view url);
std::string sha256_hex(std::string_view data);

/// ISO-8601 UTC with second precision, e.g. "2026-01-02T03:04:05Z".
std::string format_utc(std::chrono::system_clock::time_point t);
std::chrono::system_clock::time_point parse_utc(std::string_view text);

}  // namespace ragscrape
