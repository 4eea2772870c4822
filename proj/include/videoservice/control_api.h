#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "json.hpp"
#include "videoservice/net.h"
#include "videoservice/settings.h"
#include "videoservice/stream_server.h"

namespace videoservice {

struct ControlApiConfig {
  std::string bind_address = "0.0.0.0";
  uint16_t port = 8886;
  std::string console_dir;
  std::chrono::milliseconds request_timeout{5000};
  size_t max_header_bytes = 16 * 1024;
  size_t max_body_bytes = 64 * 1024;
};

struct HttpRequest {
  std::string method;
  std::string target;
  std::string path;  // target without the query string
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Minimal HTTP/1.1 server for the remote control interface:
//   GET /              console index.html, or a placeholder page
//   GET /<asset>       other console files
//   GET /stream        hands the connection to the MPJPEG server
//   GET|PUT /api/settings
//   GET /api/stats
// One request per connection (Connection: close).
class ControlApi {
 public:
  using StatsProvider = std::function<nlohmann::json()>;

  // Throws StartupError naming the port.
  static std::unique_ptr<ControlApi> Listen(const ControlApiConfig& config, SettingsStore& settings,
                                            StatsProvider stats, StreamServer* mpjpeg);
  ~ControlApi();

  uint16_t port() const { return port_; }
  void Stop();

  // Routing without the socket, for everything except /stream.
  HttpResponse Handle(const HttpRequest& request) const;

 private:
  ControlApi(const ControlApiConfig& config, net::Socket listener, SettingsStore& settings, StatsProvider stats,
             StreamServer* mpjpeg);

  void AcceptLoop();
  void ServeConnection(net::Socket socket);
  HttpResponse ServeStatic(const std::string& path) const;
  void ReapFinished();

  struct Worker {
    std::thread thread;
    std::atomic<bool> done{false};
  };

  const ControlApiConfig config_;
  net::Socket listener_;
  uint16_t port_ = 0;
  SettingsStore& settings_;
  StatsProvider stats_;
  StreamServer* mpjpeg_;

  std::atomic<bool> stopping_{false};
  std::mutex workers_mutex_;
  std::list<Worker> workers_;
  std::thread accept_thread_;
};

// Parses the request head and body from `socket`. Empty on timeout, oversize
// input or a malformed request line.
std::optional<HttpRequest> ReadHttpRequest(net::Socket& socket, const ControlApiConfig& config);

std::string SerializeResponse(const HttpResponse& response);

}  // namespace videoservice
