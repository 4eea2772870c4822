#include "videoservice/control_api.h"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

constexpr const char* kPlaceholderPage =
    "<!doctype html>\n"
    "<html><head><meta charset=\"utf-8\"><title>videoservice</title></head>\n"
    "<body>\n"
    "<h1>videoservice</h1>\n"
    "<p>The web console is not installed.</p>\n"
    "<img src=\"/stream\" alt=\"live stream\">\n"
    "<ul>\n"
    "<li><a href=\"/api/settings\">/api/settings</a></li>\n"
    "<li><a href=\"/api/stats\">/api/stats</a></li>\n"
    "</ul>\n"
    "</body></html>\n";

const char* ReasonPhrase(int status) {
  switch (status) {
    case 200: return "OK";
    case 400: return "Bad Request";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 413: return "Payload Too Large";
    case 500: return "Internal Server Error";
    case 503: return "Service Unavailable";
    default: return "Unknown";
  }
}

HttpResponse Json(int status, const nlohmann::json& body) { return {status, "application/json", body.dump()}; }

HttpResponse ErrorJson(int status, const std::string& message, const std::string& key = "") {
  nlohmann::json body = {{"error", message}};
  if (!key.empty()) body["key"] = key;
  return Json(status, body);
}

std::string ContentTypeFor(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  return "application/octet-stream";
}

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string TrimSpaces(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::optional<HttpRequest> ReadHttpRequest(net::Socket& socket, const ControlApiConfig& config) {
  std::string data;
  const auto deadline = std::chrono::steady_clock::now() + config.request_timeout;
  size_t head_end = std::string::npos;
  uint8_t buffer[4096];
  auto receive_more = [&]() -> bool {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || !socket.WaitReadable(left)) return false;
    const long n = socket.Receive(buffer);
    if (n <= 0) return false;
    data.append(reinterpret_cast<const char*>(buffer), static_cast<size_t>(n));
    return true;
  };

  while ((head_end = data.find("\r\n\r\n")) == std::string::npos) {
    if (data.size() > config.max_header_bytes || !receive_more()) return std::nullopt;
  }

  HttpRequest request;
  std::istringstream head(data.substr(0, head_end));
  std::string line;
  std::getline(head, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream request_line(line);
  std::string version;
  if (!(request_line >> request.method >> request.target >> version) || !version.starts_with("HTTP/1."))
    return std::nullopt;
  request.path = request.target.substr(0, request.target.find('?'));
  while (std::getline(head, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto colon = line.find(':');
    if (colon == std::string::npos) return std::nullopt;
    request.headers[Lower(TrimSpaces(line.substr(0, colon)))] = TrimSpaces(line.substr(colon + 1));
  }

  size_t content_length = 0;
  if (auto it = request.headers.find("content-length"); it != request.headers.end()) {
    if (it->second.empty() || !std::all_of(it->second.begin(), it->second.end(), ::isdigit)) return std::nullopt;
    content_length = std::stoul(it->second);
    if (content_length > config.max_body_bytes) return std::nullopt;
  }
  request.body = data.substr(head_end + 4);
  while (request.body.size() < content_length) {
    const size_t before = data.size();
    if (!receive_more()) return std::nullopt;
    request.body.append(data, before, std::string::npos);
  }
  request.body.resize(content_length);
  return request;
}

std::string SerializeResponse(const HttpResponse& r) {
  std::string out = "HTTP/1.1 " + std::to_string(r.status) + " " + ReasonPhrase(r.status) + "\r\n";
  out += "Content-Type: " + r.content_type + "\r\n";
  out += "Content-Length: " + std::to_string(r.body.size()) + "\r\n";
  out += "Cache-Control: no-store\r\nConnection: close\r\n\r\n";
  out += r.body;
  return out;
}

std::unique_ptr<ControlApi> ControlApi::Listen(const ControlApiConfig& config, SettingsStore& settings,
                                               StatsProvider stats, StreamServer* mpjpeg) {
  net::Socket listener = net::Listen(config.bind_address, config.port);
  return std::unique_ptr<ControlApi>(new ControlApi(config, std::move(listener), settings, std::move(stats), mpjpeg));
}

ControlApi::ControlApi(const ControlApiConfig& config, net::Socket listener, SettingsStore& settings,
                       StatsProvider stats, StreamServer* mpjpeg)
    : config_(config),
      listener_(std::move(listener)),
      port_(net::LocalPort(listener_)),
      settings_(settings),
      stats_(std::move(stats)),
      mpjpeg_(mpjpeg) {
  accept_thread_ = std::thread([this] { AcceptLoop(); });
}

ControlApi::~ControlApi() { Stop(); }

void ControlApi::Stop() {
  if (stopping_.exchange(true)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  listener_.Close();
  std::lock_guard lock(workers_mutex_);
  for (auto& worker : workers_)
    if (worker.thread.joinable()) worker.thread.join();
  workers_.clear();
}

void ControlApi::AcceptLoop() {
  while (!stopping_) {
    auto socket = net::Accept(listener_, std::chrono::milliseconds(100));
    ReapFinished();
    if (!socket) continue;
    std::lock_guard lock(workers_mutex_);
    Worker& worker = workers_.emplace_back();
    worker.thread = std::thread([this, &worker, s = std::move(*socket)]() mutable {
      try {
        ServeConnection(std::move(s));
      } catch (const std::exception& e) {
        spdlog::warn("control connection failed: {}", e.what());
      }
      worker.done = true;
    });
  }
}

void ControlApi::ReapFinished() {
  std::lock_guard lock(workers_mutex_);
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (it->done) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void ControlApi::ServeConnection(net::Socket socket) {
  socket.SetNoDelay();
  const auto request = ReadHttpRequest(socket, config_);
  if (!request) {
    socket.SendAll(SerializeResponse(ErrorJson(400, "malformed or incomplete request")));
    return;
  }
  if (request->path == "/stream" && request->method == "GET") {
    if (mpjpeg_ == nullptr) {
      socket.SendAll(SerializeResponse(ErrorJson(503, "stream not available")));
      return;
    }
    mpjpeg_->Adopt(std::move(socket));
    return;
  }
  socket.SendAll(SerializeResponse(Handle(*request)));
  socket.Shutdown();
}

HttpResponse ControlApi::Handle(const HttpRequest& request) const {
  const std::string& path = request.path;
  if (path == "/api/settings") {
    if (request.method == "GET") return Json(200, ToJson(settings_.Snapshot()));
    if (request.method != "PUT") return ErrorJson(405, "use GET or PUT");
    nlohmann::json patch;
    try {
      patch = nlohmann::json::parse(request.body);
    } catch (const nlohmann::json::parse_error& e) {
      return ErrorJson(400, std::string("body is not valid JSON: ") + e.what());
    }
    try {
      return Json(200, ToJson(settings_.ApplyPatch(patch)));
    } catch (const SettingsValidationError& e) {
      return ErrorJson(400, e.what(), e.key());
    }
  }
  if (path == "/api/stats") {
    if (request.method != "GET") return ErrorJson(405, "use GET");
    return Json(200, stats_ ? stats_() : nlohmann::json::object());
  }
  if (request.method != "GET") return ErrorJson(404, "no route for " + request.method + " " + path);
  return ServeStatic(path);
}

HttpResponse ControlApi::ServeStatic(const std::string& path) const {
  namespace fs = std::filesystem;
  const bool index = path == "/" || path == "/index.html";
  if (!config_.console_dir.empty() && path.find("..") == std::string::npos) {
    const fs::path root(config_.console_dir);
    const fs::path file = index ? root / "index.html" : root / path.substr(1);
    std::error_code ec;
    if (fs::is_regular_file(file, ec)) {
      std::ifstream in(file, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      return {200, ContentTypeFor(file), body.str()};
    }
  }
  if (index) return {200, "text/html; charset=utf-8", kPlaceholderPage};
  return ErrorJson(404, "not found: " + path);
}

}  // namespace videoservice
