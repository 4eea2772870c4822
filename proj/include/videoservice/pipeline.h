#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>

#include "json.hpp"
#include "videoservice/bandwidth_meter.h"
#include "videoservice/buffer_pool.h"
#include "videoservice/encoder_backend.h"
#include "videoservice/frame_source.h"
#include "videoservice/mpjpeg.h"
#include "videoservice/settings.h"
#include "videoservice/stream_server.h"

namespace videoservice {

struct TickReport {
  uint64_t seq = 0;
  bool skipped = false;  // pool exhausted, no frames this tick
  double encode_ms_jpeg = 0;
  double encode_ms_h264 = 0;
  size_t bytes_mpjpeg = 0;  // framed unit size, 0 when the stream failed
  size_t bytes_h264 = 0;
  bool jpeg_failed = false;
  bool h264_failed = false;
  uint64_t copies_delta = 0;
  std::chrono::nanoseconds duration{0};
  bool deadline_missed = false;
};

struct RunSummary {
  uint64_t ticks = 0;
  uint64_t skipped = 0;
  uint64_t deadline_misses = 0;
  std::chrono::nanoseconds elapsed{0};

  double tick_rate() const;
};

struct StreamCounters {
  uint64_t frames_encoded = 0;
  uint64_t units_broadcast = 0;
  uint64_t failures = 0;
};

struct PipelineOptions {
  MultipartConfig multipart;
  std::chrono::nanoseconds bandwidth_window = std::chrono::seconds(5);
  // Encode-time samples kept for mean/p95.
  size_t timing_samples = 300;
};

// The game loop. Owns the source and both encoders; servers may be null,
// which behaves like a server without clients.
//
// Per tick: settings snapshot, frame pair, encode hi as H.264 and lo as JPEG,
// frame each unit, copy it out of the pool once for every stream that has
// clients, broadcast, release every lease.
class Pipeline {
 public:
  Pipeline(BufferPool& pool, SettingsStore& settings, std::unique_ptr<FrameSource> source,
           std::unique_ptr<EncoderBackend> h264, std::unique_ptr<EncoderBackend> jpeg, StreamServer* h264_server,
           StreamServer* mpjpeg_server, PipelineOptions options = {});

  TickReport Tick();

  // Paced at the fps of the current settings snapshot, without catch-up:
  // a late tick starts the next one immediately instead of bursting.
  // Returns on stop request or after `duration`.
  RunSummary Run(std::stop_token stop, std::optional<std::chrono::nanoseconds> duration = std::nullopt);

  // Wakes a Run() sleeping between ticks so it notices a stop request.
  void Wake();

  RunSummary summary() const;
  StreamCounters counters(StreamKind kind) const;
  double BandwidthBps(StreamKind kind) const;
  uint64_t bytes_total(StreamKind kind) const;

  // Stats document served by the control API.
  nlohmann::json StatsJson() const;

 private:
  struct StreamState {
    BandwidthMeter meter;
    StreamCounters counters;
    std::deque<double> encode_ms;
    explicit StreamState(std::chrono::nanoseconds window) : meter(window) {}
  };

  // Encodes one frame and, when someone listens, broadcasts it. Returns the
  // framed size; throws on encoder failure.
  size_t EmitStream(StreamKind kind, EncoderBackend& backend, const RawFrame& frame, StreamServer* server,
                    double& encode_ms);
  void RecordTiming(StreamState& state, double ms);
  StreamState& state(StreamKind kind) { return kind == StreamKind::kH264 ? h264_state_ : jpeg_state_; }
  const StreamState& state(StreamKind kind) const { return kind == StreamKind::kH264 ? h264_state_ : jpeg_state_; }

  BufferPool& pool_;
  SettingsStore& settings_;
  std::unique_ptr<FrameSource> source_;
  std::unique_ptr<EncoderBackend> h264_;
  std::unique_ptr<EncoderBackend> jpeg_;
  StreamServer* h264_server_;
  StreamServer* mpjpeg_server_;
  const PipelineOptions options_;
  uint64_t configured_version_ = 0;
  bool configured_ = false;

  mutable std::mutex stats_mutex_;
  StreamState h264_state_;
  StreamState jpeg_state_;
  RunSummary summary_;

  std::mutex wake_mutex_;
  std::condition_variable_any wake_;
};

}  // namespace videoservice
