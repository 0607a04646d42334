#include <openssl/evp.h>

#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ragscrape/error.hpp"
#include "ragscrape/http.hpp"
#include "ragscrape/ingest.hpp"
#include "ragscrape/robots.hpp"
#include "ragscrape/unicode.hpp"

namespace ragscrape {

void FetchPolicy::validate() const {
  if (timeout.count() <= 0) throw Error(ErrorCode::kInvalidConfig, "fetch timeout must be positive");
  if (max_retries > 10) throw Error(ErrorCode::kInvalidConfig, "max_retries must be <= 10");
  if (min_host_interval.count() < 0) throw Error(ErrorCode::kInvalidConfig, "min_host_interval must be >= 0");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::filesystem::path cache_path_for(const std::filesystem::path& cache_dir, std::string_view url) {
  return cache_dir / (sha256_hex(url) + ".html");
}

std::string format_utc(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::chrono::system_clock::time_point parse_utc(std::string_view text) {
  std::tm tm{};
  std::istringstream is{std::string(text)};
  is >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  if (is.fail()) throw Error(ErrorCode::kIo, "bad timestamp: " + std::string(text));
  return std::chrono::system_clock::from_time_t(timegm(&tm));
}

namespace {

// Spaces requests to one host at least `interval` apart, process-wide.
class HostThrottle {
 public:
  static HostThrottle& instance() {
    static HostThrottle throttle;
    return throttle;
  }

  void wait(const std::string& host, std::chrono::milliseconds interval) {
    if (interval.count() <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      auto& next = next_[host];
      slot = std::max(now, next);
      next = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::mutex mu_;
  std::unordered_map<std::string, std::chrono::steady_clock::time_point> next_;
};

std::mutex& cache_write_mutex(const std::filesystem::path& file) {
  static std::mutex table_mu;
  static std::unordered_map<std::string, std::unique_ptr<std::mutex>> table;
  std::lock_guard lock(table_mu);
  auto& slot = table[file.string()];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
  }
  std::filesystem::rename(tmp, path);
}

std::optional<RawPage> cache_lookup(const std::filesystem::path& dir, const std::string& url) {
  const auto html_path = cache_path_for(dir, url);
  auto meta_path = html_path;
  meta_path.replace_extension(".meta.json");
  const auto meta_text = read_file(meta_path);
  if (!meta_text) return std::nullopt;
  auto html = read_file(html_path);
  if (!html) return std::nullopt;
  const auto meta = nlohmann::json::parse(*meta_text, nullptr, false);
  if (meta.is_discarded() || meta.value("url", "") != url) return std::nullopt;
  RawPage page;
  page.url = url;
  page.status = meta.value("status", 200);
  page.html = std::move(*html);
  page.fetched_at = parse_utc(meta.value("fetched_at", "1970-01-01T00:00:00Z"));
  page.decode_lossy = meta.value("decode_lossy", false);
  return page;
}

void cache_store(const std::filesystem::path& dir, const RawPage& page) {
  std::filesystem::create_directories(dir);
  const auto html_path = cache_path_for(dir, page.url);
  auto meta_path = html_path;
  meta_path.replace_extension(".meta.json");
  const nlohmann::json meta{{"url", page.url},
                            {"status", page.status},
                            {"fetched_at", format_utc(page.fetched_at)},
                            {"decode_lossy", page.decode_lossy}};
  std::lock_guard lock(cache_write_mutex(html_path));
  write_file_atomic(html_path, page.html);
  write_file_atomic(meta_path, meta.dump());
}

RawPage fetch_local(const std::string& url) {
  std::string_view path = url;
  if (path.starts_with("file://")) path.remove_prefix(7);
  const std::filesystem::path file{std::string(path)};
  std::error_code ec;
  if (!std::filesystem::is_regular_file(file, ec)) {
    throw Error(ErrorCode::kNotFound, "no such file: " + file.string());
  }
  const auto bytes = read_file(file);
  if (!bytes) throw Error(ErrorCode::kNotFound, "cannot read " + file.string());
  auto decoded = unicode::decode_utf8_lossy(*bytes);
  return RawPage{url, 0, std::move(decoded.text), std::chrono::system_clock::now(), decoded.lossy};
}

}  // namespace

HttpFetcher::HttpFetcher(FetchPolicy policy) : policy_(std::move(policy)) { policy_.validate(); }

bool HttpFetcher::robots_allows(const std::string& origin, const std::string& target) {
  std::shared_ptr<const RobotsRules> rules;
  {
    std::lock_guard lock(robots_mu_);
    if (const auto it = robots_.find(origin); it != robots_.end()) rules = it->second;
  }
  if (!rules) {
    http::Url url;
    http::Url::parse(origin, url);
    HostThrottle::instance().wait(url.host + ":" + std::to_string(url.port), policy_.min_host_interval);
    http::Request req;
    req.url = origin + "/robots.txt";
    req.timeout = policy_.timeout;
    req.user_agent = policy_.user_agent;
    const http::Response resp = http::send(req);
    RobotsRules parsed = RobotsRules::allow_all();
    if (resp.failure == http::Failure::kNone) {
      if (resp.status >= 200 && resp.status < 300) {
        parsed = RobotsRules::parse(resp.body, policy_.user_agent);
      } else if (resp.status >= 500) {
        parsed = RobotsRules::disallow_all();
      }
    }
    rules = std::make_shared<const RobotsRules>(std::move(parsed));
    std::lock_guard lock(robots_mu_);
    robots_.emplace(origin, rules);
  }
  return rules->allowed(target);
}

RawPage HttpFetcher::fetch(const std::string& url) {
  http::Url parsed;
  if (!http::Url::parse(url, parsed)) return fetch_local(url);

  if (policy_.cache_dir) {
    if (auto cached = cache_lookup(*policy_.cache_dir, url)) return std::move(*cached);
  }
  if (policy_.respect_robots && !robots_allows(parsed.origin(), parsed.target)) {
    throw Error(ErrorCode::kRobotsDisallowed, url);
  }

  http::Request req;
  req.url = url;
  req.timeout = policy_.timeout;
  req.user_agent = policy_.user_agent;
  const std::string host_key = parsed.host + ":" + std::to_string(parsed.port);

  http::Response resp;
  for (unsigned attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(policy_.retry_backoff * (1u << (attempt - 1)));
    HostThrottle::instance().wait(host_key, policy_.min_host_interval);
    resp = http::send(req);
    const bool retryable = resp.failure != http::Failure::kNone || resp.status >= 500 || resp.status == 429;
    if (!retryable) break;
  }
  if (resp.failure == http::Failure::kTimeout) throw Error(ErrorCode::kTimeout, url);
  if (resp.failure == http::Failure::kConnection) {
    throw Error(ErrorCode::kFetchFailed, url + ": " + resp.error, 0);
  }
  if (resp.status >= 400) {
    throw Error(ErrorCode::kFetchFailed, url + " returned HTTP " + std::to_string(resp.status), resp.status);
  }

  auto decoded = unicode::decode_utf8_lossy(resp.body);
  RawPage page{url, resp.status, std::move(decoded.text), std::chrono::system_clock::now(), decoded.lossy};
  if (policy_.cache_dir) cache_store(*policy_.cache_dir, page);
  return page;
}

RawPage fetch_page(const std::string& url, const FetchPolicy& policy) {
  HttpFetcher fetcher(policy);
  return fetcher.fetch(url);
}

}  // namespace ragscrape
