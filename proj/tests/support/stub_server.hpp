#pragma once

#include <string>
#include <thread>

// Must match the library's build of cpp-httplib.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace ragscrape::testkit {

// httplib server on an ephemeral loopback port. Register handlers on
// `server` before calling start().
class StubServer {
 public:
  httplib::Server server;

  ~StubServer() { stop(); }

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string url(const std::string& path = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  int port_ = 0;
  std::thread thread_;
};

}  // namespace ragscrape::testkit
