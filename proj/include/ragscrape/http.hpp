#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ragscrape::http {

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string target;  // path plus query, always starts with '/'

  /// Returns false unless `text` is an absolute http(s) URL.
  static bool parse(std::string_view text, Url& out);
  std::string origin() const;
  std::string path() const;  // target without the query string
};

enum class Failure { kNone, kTimeout, kConnection };

struct Request {
  std::string method = "GET";
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::string content_type = "application/json";
  std::chrono::milliseconds timeout{30000};
  std::string user_agent = "ragscrape/0.1";
};

struct Response {
  int status = 0;
  std::string body;
  Failure failure = Failure::kNone;
  std::string error;
};

/// Performs one request. Never throws for transport problems (reported via
/// `failure`); throws Error{kOfflineViolation} while offline mode is on.
Response send(const Request& request);

/// Process-wide switch forbidding all network I/O.
void set_offline(bool offline) noexcept;
bool offline() noexcept;

}  // namespace ragscrape::http
