#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "turtletalk/session.hpp"

namespace turtletalk {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  SessionConfig defaults;
  std::optional<std::filesystem::path> transcript_dir;
  std::chrono::milliseconds heartbeat{30'000};
  unsigned io_threads = 2;
  unsigned backend_threads = 2;
};

/// HTTP and WebSocket front end for many sessions.
///
///   POST /sessions                  create; body is an optional config object
///   GET  /sessions/{id}/transcript  JSON lines, one SessionEvent per line
///   GET  /sessions/{id}/view        latest ViewModel
///   GET  /sessions/{id}/stream      WebSocket upgrade
///
/// Each session runs on its own strand. Backend calls run on a separate
/// pool and post their results back to that strand.
class SessionServer {
 public:
  explicit SessionServer(ServerOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Binds and starts serving on background threads. Throws on bind failure.
  void start();
  /// Blocks the caller until stop() is called from elsewhere.
  void wait();
  void stop();

  std::uint16_t port() const;
  std::size_t session_count() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace turtletalk
