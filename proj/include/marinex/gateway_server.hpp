#pragma once

// HTTP + WebSocket front end for SessionManager.
//
//   GET    /scenarios                 preset names and descriptions
//   GET    /sessions                  all sessions
//   POST   /sessions                  {"preset": name} | {"scenario": {...}}, optional "seed"
//   GET    /sessions/{id}             SessionInfo
//   DELETE /sessions/{id}
//   WS     /sessions/{id}/stream?rate=Hz   telemetry frames (JSON text)
//   WS     /sessions/{id}/control          CommandMessage in, ack/rejection out
//
// Any other GET is served from the static directory when one is configured.

#include <filesystem>
#include <memory>
#include <string>

#include "marinex/session.hpp"

namespace marinex {

struct GatewayOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;
  Pace pace = Pace::RealTime;
  double default_rate = 10.0;  // Hz, when the stream URL has no rate
  unsigned threads = 2;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Routes one plain HTTP request. `target` may carry a query string.
HttpReply handle_http(SessionManager& sessions, const std::string& method,
                      const std::string& target, const std::string& body,
                      const std::filesystem::path& static_dir = {});

class GatewayServer {
 public:
  explicit GatewayServer(GatewayOptions options);
  ~GatewayServer();
  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  unsigned short port() const;
  SessionManager& sessions();

  // Serves on background threads.
  void start();
  // Serves until stop() or SIGINT/SIGTERM.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace marinex
