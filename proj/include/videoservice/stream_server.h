#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "videoservice/mpjpeg.h"
#include "videoservice/net.h"

namespace videoservice {

enum class StreamKind { kH264, kMpjpeg };

const char* ToString(StreamKind kind);

// Immutable wire bytes shared by every session queue that holds them.
using Chunk = std::shared_ptr<const std::vector<uint8_t>>;

// One fully framed unit: an MPJPEG part or an Annex-B chunk.
struct StreamUnit {
  Chunk bytes;
  bool keyframe = false;
  uint64_t seq = 0;
};

enum class SessionState { kAwaitingKeyframe, kStreaming, kClosing };

const char* ToString(SessionState state);

struct ServerConfig {
  StreamKind kind = StreamKind::kMpjpeg;
  std::string bind_address = "0.0.0.0";
  uint16_t port = 0;  // 0 = ephemeral
  size_t max_clients = 32;
  // MPJPEG sessions drop their oldest queued part beyond this depth.
  size_t mpjpeg_queue_parts = 2;
  // H.264 sessions are disconnected when their queue would exceed this.
  size_t h264_queue_bytes = 8u << 20;
  // SO_SNDBUF for sessions; 0 keeps the kernel default.
  int send_buffer_bytes = 0;
  MultipartConfig multipart;
  // Raw MPJPEG connections: inbound bytes are discarded up to the first
  // blank line, this many bytes, or this timeout, whichever comes first.
  std::chrono::milliseconds request_timeout{1000};
  size_t max_request_bytes = 2048;
};

struct SessionStats {
  uint64_t id = 0;
  std::chrono::system_clock::time_point connected_at;
  SessionState state = SessionState::kAwaitingKeyframe;
  uint64_t bytes_enqueued = 0;
  uint64_t bytes_sent = 0;
  uint64_t units_enqueued = 0;
  uint64_t frames_dropped = 0;
  size_t queue_depth = 0;
  size_t queued_bytes = 0;
};

struct BroadcastOutcome {
  size_t enqueued = 0;
  size_t dropped = 0;
  size_t awaiting = 0;
  size_t disconnected = 0;
};

struct ServerTotals {
  uint64_t sessions_accepted = 0;
  uint64_t sessions_rejected = 0;
  uint64_t frames_dropped = 0;
  uint64_t overflow_disconnects = 0;
};

// TCP fan-out server for one stream kind.
//
// Every session owns a bounded queue drained by its own writer thread, so
// Broadcast only ever appends to queues and never waits on a socket.
// MPJPEG sessions drop their oldest queued part when full; H.264 sessions are
// disconnected on overflow, because dropping NAL bytes breaks the stream.
// H.264 sessions start in kAwaitingKeyframe and receive the stream header
// (SPS + PPS) together with the first keyframe they see.
class StreamServer {
 public:
  // Throws StartupError (with the port in the message) when the port is taken.
  static std::unique_ptr<StreamServer> Listen(const ServerConfig& config);

  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  StreamKind kind() const { return config_.kind; }
  uint16_t port() const { return port_; }

  void SetStreamHeader(std::vector<uint8_t> header);

  // Called by the pipeline loop only.
  BroadcastOutcome Broadcast(const StreamUnit& unit);

  std::vector<SessionStats> SessionSnapshot() const;
  size_t client_count() const;
  ServerTotals totals() const;

  // Hands over a connection whose HTTP request has already been read (the
  // same-origin /stream route). MPJPEG only; the preamble is sent first.
  void Adopt(net::Socket socket);

  void Stop();

 private:
  struct Session;

  StreamServer(const ServerConfig& config, net::Socket listener);

  void AcceptLoop();
  void AddSession(net::Socket socket, bool read_request);
  void WriterLoop(Session& session);
  void ReadRequest(Session& session);
  // Requires sessions_mutex_ held.
  size_t ReapClosed();

  const ServerConfig config_;
  net::Socket listener_;
  uint16_t port_ = 0;
  std::string preamble_;

  mutable std::mutex sessions_mutex_;
  std::vector<std::unique_ptr<Session>> sessions_;
  Chunk header_;
  uint64_t next_id_ = 1;
  ServerTotals totals_;

  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
};

}  // namespace videoservice
