#include "videoservice/stream_server.h"

#include <algorithm>
#include <condition_variable>
#include <deque>

#include <spdlog/spdlog.h>

#include "videoservice/errors.h"

namespace videoservice {

const char* ToString(StreamKind kind) { return kind == StreamKind::kH264 ? "h264" : "mpjpeg"; }

const char* ToString(SessionState state) {
  switch (state) {
    case SessionState::kAwaitingKeyframe:
      return "awaiting-keyframe";
    case SessionState::kStreaming:
      return "streaming";
    case SessionState::kClosing:
      return "closing";
  }
  return "unknown";
}

struct StreamServer::Session {
  uint64_t id = 0;
  std::chrono::system_clock::time_point connected_at;
  net::Socket socket;
  bool read_request = false;

  std::mutex mutex;
  std::condition_variable wake;
  std::deque<Chunk> queue;
  size_t queued_bytes = 0;
  SessionState state = SessionState::kAwaitingKeyframe;
  uint64_t bytes_enqueued = 0;
  uint64_t units_enqueued = 0;
  uint64_t frames_dropped = 0;
  std::atomic<uint64_t> bytes_sent{0};
  std::atomic<bool> finished{false};

  std::thread writer;

  // Requires `mutex` held.
  void Push(Chunk chunk) {
    queued_bytes += chunk->size();
    bytes_enqueued += chunk->size();
    ++units_enqueued;
    queue.push_back(std::move(chunk));
  }

  // Requires `mutex` held.
  void MarkClosing() {
    state = SessionState::kClosing;
    socket.Shutdown();
    wake.notify_all();
  }
};

std::unique_ptr<StreamServer> StreamServer::Listen(const ServerConfig& config) {
  if (config.kind == StreamKind::kMpjpeg) config.multipart.Validate();
  net::Socket listener = net::Listen(config.bind_address, config.port);
  return std::unique_ptr<StreamServer>(new StreamServer(config, std::move(listener)));
}

StreamServer::StreamServer(const ServerConfig& config, net::Socket listener)
    : config_(config), listener_(std::move(listener)) {
  port_ = net::LocalPort(listener_);
  if (config_.kind == StreamKind::kMpjpeg) preamble_ = ResponsePreamble(config_.multipart);
  accept_thread_ = std::thread([this] { AcceptLoop(); });
  spdlog::info("{} server listening on port {}", ToString(config_.kind), port_);
}

StreamServer::~StreamServer() { Stop(); }

void StreamServer::Stop() {
  if (stopping_.exchange(true)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  listener_.Close();
  std::vector<std::unique_ptr<Session>> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    sessions.swap(sessions_);
  }
  for (auto& session : sessions) {
    {
      std::lock_guard lock(session->mutex);
      session->MarkClosing();
    }
    if (session->writer.joinable()) session->writer.join();
  }
}

void StreamServer::SetStreamHeader(std::vector<uint8_t> header) {
  std::lock_guard lock(sessions_mutex_);
  header_ = header.empty() ? nullptr : std::make_shared<const std::vector<uint8_t>>(std::move(header));
}

void StreamServer::AcceptLoop() {
  while (!stopping_) {
    auto socket = net::Accept(listener_, std::chrono::milliseconds(100));
    if (!socket) continue;
    AddSession(std::move(*socket), config_.kind == StreamKind::kMpjpeg);
  }
}

void StreamServer::Adopt(net::Socket socket) {
  if (config_.kind != StreamKind::kMpjpeg) throw ContractError("only MPJPEG servers adopt HTTP connections");
  AddSession(std::move(socket), false);
}

void StreamServer::AddSession(net::Socket socket, bool read_request) {
  std::lock_guard lock(sessions_mutex_);
  ReapClosed();
  if (stopping_ || sessions_.size() >= config_.max_clients) {
    ++totals_.sessions_rejected;
    spdlog::warn("{} server: rejecting client, {} already connected", ToString(config_.kind), sessions_.size());
    return;
  }
  if (config_.send_buffer_bytes > 0) socket.SetSendBuffer(config_.send_buffer_bytes);
  socket.SetNoDelay();

  auto session = std::make_unique<Session>();
  session->id = next_id_++;
  session->connected_at = std::chrono::system_clock::now();
  session->socket = std::move(socket);
  session->read_request = read_request;
  Session* raw = session.get();
  session->writer = std::thread([this, raw] { WriterLoop(*raw); });
  sessions_.push_back(std::move(session));
  ++totals_.sessions_accepted;
}

void StreamServer::ReadRequest(Session& session) {
  // Discard up to the end of the request head; raw probes may send nothing.
  const auto deadline = std::chrono::steady_clock::now() + config_.request_timeout;
  std::string head;
  uint8_t buffer[512];
  while (head.size() < config_.max_request_bytes && head.find("\r\n\r\n") == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || !session.socket.WaitReadable(left)) break;
    const size_t room = std::min(sizeof buffer, config_.max_request_bytes - head.size());
    const long n = session.socket.Receive(std::span(buffer, room));
    if (n <= 0) break;
    head.append(reinterpret_cast<const char*>(buffer), static_cast<size_t>(n));
  }
}

void StreamServer::WriterLoop(Session& session) {
  if (config_.kind == StreamKind::kMpjpeg) {
    if (session.read_request) ReadRequest(session);
    bool ok = session.socket.SendAll(preamble_);
    {
      std::lock_guard lock(session.mutex);
      session.bytes_enqueued += preamble_.size();
      if (ok && session.state != SessionState::kClosing) session.state = SessionState::kStreaming;
    }
    if (ok) session.bytes_sent += preamble_.size();
    else {
      std::lock_guard lock(session.mutex);
      session.MarkClosing();
    }
  }

  for (;;) {
    Chunk chunk;
    {
      std::unique_lock lock(session.mutex);
      session.wake.wait(lock, [&] { return session.state == SessionState::kClosing || !session.queue.empty(); });
      if (session.state == SessionState::kClosing) break;
      chunk = std::move(session.queue.front());
      session.queue.pop_front();
      session.queued_bytes -= chunk->size();
    }
    if (!session.socket.SendAll(*chunk)) {
      std::lock_guard lock(session.mutex);
      session.MarkClosing();
      break;
    }
    session.bytes_sent += chunk->size();
  }
  session.finished = true;
}

size_t StreamServer::ReapClosed() {
  size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    Session& session = **it;
    bool closing;
    {
      std::lock_guard lock(session.mutex);
      if (session.state != SessionState::kClosing && (session.finished || session.socket.PeerClosed()))
        session.MarkClosing();
      closing = session.state == SessionState::kClosing;
    }
    if (closing) {
      if (session.writer.joinable()) session.writer.join();
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

BroadcastOutcome StreamServer::Broadcast(const StreamUnit& unit) {
  BroadcastOutcome outcome;
  if (!unit.bytes) return outcome;

  std::lock_guard lock(sessions_mutex_);
  outcome.disconnected += ReapClosed();
  for (auto& session_ptr : sessions_) {
    Session& session = *session_ptr;
    std::lock_guard session_lock(session.mutex);
    if (session.state == SessionState::kClosing) continue;

    if (config_.kind == StreamKind::kMpjpeg) {
      // Parts start flowing once the preamble is out.
      if (session.state == SessionState::kAwaitingKeyframe) {
        ++outcome.awaiting;
        continue;
      }
      if (session.queue.size() >= config_.mpjpeg_queue_parts) {
        session.queued_bytes -= session.queue.front()->size();
        session.queue.pop_front();
        ++session.frames_dropped;
        ++totals_.frames_dropped;
        ++outcome.dropped;
      }
      session.Push(unit.bytes);
    } else {
      size_t incoming = unit.bytes->size();
      const bool joining = session.state == SessionState::kAwaitingKeyframe;
      if (joining) {
        if (!unit.keyframe) {
          ++outcome.awaiting;
          continue;
        }
        if (header_) incoming += header_->size();
      }
      if (session.queued_bytes + incoming > config_.h264_queue_bytes) {
        spdlog::warn("h264 session {}: queue would reach {} bytes, disconnecting", session.id,
                     session.queued_bytes + incoming);
        session.MarkClosing();
        ++totals_.overflow_disconnects;
        ++outcome.disconnected;
        continue;
      }
      if (joining) {
        if (header_) session.Push(header_);
        session.state = SessionState::kStreaming;
      }
      session.Push(unit.bytes);
    }
    ++outcome.enqueued;
    session.wake.notify_one();
  }
  return outcome;
}

std::vector<SessionStats> StreamServer::SessionSnapshot() const {
  std::lock_guard lock(sessions_mutex_);
  std::vector<SessionStats> rows;
  rows.reserve(sessions_.size());
  for (const auto& session_ptr : sessions_) {
    Session& session = *session_ptr;
    std::lock_guard session_lock(session.mutex);
    if (session.state == SessionState::kClosing) continue;
    rows.push_back({session.id, session.connected_at, session.state, session.bytes_enqueued,
                    session.bytes_sent.load(), session.units_enqueued, session.frames_dropped,
                    session.queue.size(), session.queued_bytes});
  }
  return rows;
}

size_t StreamServer::client_count() const {
  std::lock_guard lock(sessions_mutex_);
  size_t count = 0;
  for (const auto& session : sessions_) {
    std::lock_guard session_lock(session->mutex);
    if (session->state != SessionState::kClosing) ++count;
  }
  return count;
}

ServerTotals StreamServer::totals() const {
  std::lock_guard lock(sessions_mutex_);
  return totals_;
}

}  // namespace videoservice
