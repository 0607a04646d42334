#include "ragscrape/http.hpp"

#include <atomic>
#include <charconv>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ragscrape/error.hpp"

namespace ragscrape::http {

namespace {
std::atomic<bool> g_offline{false};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace

void set_offline(bool offline) noexcept { g_offline = offline; }
bool offline() noexcept { return g_offline; }

bool Url::parse(std::string_view text, Url& out) {
  const auto sep = text.find("://");
  if (sep == std::string_view::npos) return false;
  out.scheme = lower(text.substr(0, sep));
  if (out.scheme != "http" && out.scheme != "https") return false;
  std::string_view rest = text.substr(sep + 3);
  const auto path_pos = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, path_pos);
  std::string_view target =
      path_pos == std::string_view::npos ? std::string_view{} : rest.substr(path_pos);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority = authority.substr(at + 1);
  }
  out.port = out.scheme == "https" ? 443 : 80;
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    const auto port_text = authority.substr(colon + 1);
    int port = 0;
    const auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || p != port_text.data() + port_text.size() || port <= 0 || port > 65535) {
      return false;
    }
    out.port = port;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) return false;
  out.host = lower(authority);
  if (const auto hash = target.find('#'); hash != std::string_view::npos) {
    target = target.substr(0, hash);
  }
  out.target = target.empty() || target.front() != '/' ? "/" + std::string(target) : std::string(target);
  return true;
}

std::string Url::origin() const {
  const bool default_port = (scheme == "http" && port == 80) || (scheme == "https" && port == 443);
  return scheme + "://" + host + (default_port ? "" : ":" + std::to_string(port));
}

std::string Url::path() const { return target.substr(0, target.find('?')); }

Response send(const Request& request) {
  if (offline()) {
    throw Error(ErrorCode::kOfflineViolation, "network access attempted in offline mode: " + request.url);
  }
  Url url;
  if (!Url::parse(request.url, url)) {
    return Response{0, {}, Failure::kConnection, "not an absolute http(s) URL: " + request.url};
  }
  httplib::Client client(url.origin());
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_follow_location(true);

  httplib::Headers headers{{"User-Agent", request.user_agent}};
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  httplib::Result result = request.method == "POST"
                               ? client.Post(url.target, headers, request.body, request.content_type)
                               : client.Get(url.target, headers);
  Response response;
  if (!result) {
    const auto err = result.error();
    response.failure = (err == httplib::Error::Read || err == httplib::Error::Write ||
                        err == httplib::Error::ConnectionTimeout)
                           ? Failure::kTimeout
                           : Failure::kConnection;
    response.error = httplib::to_string(err);
    return response;
  }
  response.status = result->status;
  response.body = std::move(result->body);
  return response;
}

}  // namespace ragscrape::http
