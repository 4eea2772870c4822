#include "videoservice/pipeline.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include <spdlog/spdlog.h>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

using SteadyClock = std::chrono::steady_clock;

double Ms(SteadyClock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

std::chrono::nanoseconds Period(int fps) {
  return std::chrono::nanoseconds(1'000'000'000LL / std::max(1, fps));
}

double Percentile95(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const size_t rank = (values.size() * 95 + 99) / 100;  // nearest-rank
  return values[std::max<size_t>(rank, 1) - 1];
}

}  // namespace

double RunSummary::tick_rate() const {
  const double seconds = std::chrono::duration<double>(elapsed).count();
  return seconds > 0 ? static_cast<double>(ticks) / seconds : 0;
}

Pipeline::Pipeline(BufferPool& pool, SettingsStore& settings, std::unique_ptr<FrameSource> source,
                   std::unique_ptr<EncoderBackend> h264, std::unique_ptr<EncoderBackend> jpeg,
                   StreamServer* h264_server, StreamServer* mpjpeg_server, PipelineOptions options)
    : pool_(pool),
      settings_(settings),
      source_(std::move(source)),
      h264_(std::move(h264)),
      jpeg_(std::move(jpeg)),
      h264_server_(h264_server),
      mpjpeg_server_(mpjpeg_server),
      options_(std::move(options)),
      h264_state_(options_.bandwidth_window),
      jpeg_state_(options_.bandwidth_window) {
  if (!source_ || !h264_ || !jpeg_) throw ContractError("pipeline needs a source and both encoders");
  options_.multipart.Validate();
}

TickReport Pipeline::Tick() {
  const auto started = SteadyClock::now();
  TickReport report;
  const uint64_t copies_before = pool_.Stats().copies;

  const CameraSettings settings = settings_.Snapshot();
  if (!configured_ || settings.version != configured_version_) {
    for (EncoderBackend* backend : {h264_.get(), jpeg_.get()}) {
      try {
        backend->Configure(settings);
      } catch (const std::exception& e) {
        spdlog::warn("encoder configure failed: {}", e.what());
      }
    }
    configured_version_ = settings.version;
    configured_ = true;
  }

  std::optional<FramePair> pair;
  try {
    pair = source_->NextFramePair(settings);
  } catch (const ExhaustedError& e) {
    report.skipped = true;
    std::lock_guard lock(stats_mutex_);
    ++summary_.skipped;
    return report;
  }
  LeaseGuard hi_guard(pool_, pair->hi.lease);
  LeaseGuard lo_guard(pool_, pair->lo.lease);
  report.seq = pair->hi.seq;

  try {
    report.bytes_h264 = EmitStream(StreamKind::kH264, *h264_, pair->hi, h264_server_, report.encode_ms_h264);
  } catch (const std::exception& e) {
    report.h264_failed = true;
    spdlog::debug("h264 path failed on seq {}: {}", report.seq, e.what());
  }
  try {
    report.bytes_mpjpeg = EmitStream(StreamKind::kMpjpeg, *jpeg_, pair->lo, mpjpeg_server_, report.encode_ms_jpeg);
  } catch (const std::exception& e) {
    report.jpeg_failed = true;
    spdlog::debug("jpeg path failed on seq {}: {}", report.seq, e.what());
  }
  hi_guard.Reset();
  lo_guard.Reset();

  report.copies_delta = pool_.Stats().copies - copies_before;
  report.duration = SteadyClock::now() - started;
  report.deadline_missed = report.duration > Period(settings.fps);

  std::lock_guard lock(stats_mutex_);
  ++summary_.ticks;
  if (report.deadline_missed) ++summary_.deadline_misses;
  if (report.h264_failed) ++h264_state_.counters.failures;
  if (report.jpeg_failed) ++jpeg_state_.counters.failures;
  return report;
}

size_t Pipeline::EmitStream(StreamKind kind, EncoderBackend& backend, const RawFrame& frame, StreamServer* server,
                            double& encode_ms) {
  const auto started = SteadyClock::now();
  backend.Submit(frame);
  EncodedUnit unit = backend.Collect();
  encode_ms = Ms(SteadyClock::now() - started);
  LeaseGuard payload(pool_, unit.payload);

  const size_t payload_size = unit.payload.length;
  std::string part_header;
  if (kind == StreamKind::kMpjpeg) {
    part_header = PartHeader(payload_size, options_.multipart,
                             options_.multipart.include_timestamp_header
                                 ? std::optional<std::chrono::nanoseconds>(unit.timestamp)
                                 : std::nullopt);
  }
  const size_t framed = kind == StreamKind::kMpjpeg ? part_header.size() + payload_size + kPartTrailer.size()
                                                    : payload_size;

  bool broadcast = false;
  if (server != nullptr && server->client_count() > 0) {
    auto bytes = std::make_shared<std::vector<uint8_t>>();
    bytes->reserve(framed);
    bytes->insert(bytes->end(), part_header.begin(), part_header.end());
    pool_.CopyOut(unit.payload, *bytes);
    if (kind == StreamKind::kMpjpeg) bytes->insert(bytes->end(), kPartTrailer.begin(), kPartTrailer.end());
    payload.Reset();
    server->Broadcast(StreamUnit{std::move(bytes), unit.keyframe, unit.seq});
    broadcast = true;
  }

  std::lock_guard lock(stats_mutex_);
  StreamState& s = state(kind);
  ++s.counters.frames_encoded;
  if (broadcast) ++s.counters.units_broadcast;
  s.meter.Record(framed);
  RecordTiming(s, encode_ms);
  return framed;
}

void Pipeline::RecordTiming(StreamState& s, double ms) {
  s.encode_ms.push_back(ms);
  while (s.encode_ms.size() > options_.timing_samples) s.encode_ms.pop_front();
}

RunSummary Pipeline::Run(std::stop_token stop, std::optional<std::chrono::nanoseconds> duration) {
  const auto started = SteadyClock::now();
  const auto until = duration ? started + *duration : SteadyClock::time_point::max();
  uint64_t ticks_before;
  {
    std::lock_guard lock(stats_mutex_);
    ticks_before = summary_.ticks + summary_.skipped;
  }
  auto next = started;
  while (!stop.stop_requested()) {
    const auto now = SteadyClock::now();
    if (now >= until) break;
    if (now < next) {
      std::unique_lock lock(wake_mutex_);
      const auto wake_at = std::min(next, until);
      wake_.wait_until(lock, stop, wake_at, [] { return false; });
      continue;
    }
    Tick();
    const auto period = Period(settings_.Snapshot().fps);
    next += period;
    const auto after = SteadyClock::now();
    if (next < after) next = after;  // late: no catch-up burst
  }
  std::lock_guard lock(stats_mutex_);
  summary_.elapsed += SteadyClock::now() - started;
  RunSummary run;
  run.ticks = summary_.ticks + summary_.skipped - ticks_before;
  run.elapsed = SteadyClock::now() - started;
  return run;
}

void Pipeline::Wake() { wake_.notify_all(); }

RunSummary Pipeline::summary() const {
  std::lock_guard lock(stats_mutex_);
  return summary_;
}

StreamCounters Pipeline::counters(StreamKind kind) const {
  std::lock_guard lock(stats_mutex_);
  return state(kind).counters;
}

double Pipeline::BandwidthBps(StreamKind kind) const { return state(kind).meter.BitsPerSecond(); }

uint64_t Pipeline::bytes_total(StreamKind kind) const { return state(kind).meter.total_bytes(); }

nlohmann::json Pipeline::StatsJson() const {
  auto stream_json = [&](StreamKind kind, const StreamServer* server) {
    std::vector<double> samples;
    StreamCounters counters;
    {
      std::lock_guard lock(stats_mutex_);
      const StreamState& s = state(kind);
      samples.assign(s.encode_ms.begin(), s.encode_ms.end());
      counters = s.counters;
    }
    const double mean =
        samples.empty() ? 0 : std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    nlohmann::json j = {{"bytes_total", bytes_total(kind)},
                        {"bandwidth_bps", BandwidthBps(kind)},
                        {"frames_encoded", counters.frames_encoded},
                        {"units_broadcast", counters.units_broadcast},
                        {"failures", counters.failures},
                        {"encode_ms", {{"mean", mean}, {"p95", Percentile95(samples)}}},
                        {"clients", 0},
                        {"drops", 0},
                        {"disconnects", 0}};
    if (server != nullptr) {
      const ServerTotals totals = server->totals();
      j["clients"] = server->client_count();
      j["drops"] = totals.frames_dropped;
      j["disconnects"] = totals.overflow_disconnects;
      j["port"] = server->port();
    }
    return j;
  };
  const PoolStats pool = pool_.Stats();
  const RunSummary run = summary();
  return {{"h264", stream_json(StreamKind::kH264, h264_server_)},
          {"mpjpeg", stream_json(StreamKind::kMpjpeg, mpjpeg_server_)},
          {"pool", {{"copies", pool.copies}, {"maps", pool.maps}, {"live", pool.live}, {"capacity", pool.capacity}}},
          {"pipeline",
           {{"ticks", run.ticks},
            {"skipped_ticks", run.skipped},
            {"deadline_misses", run.deadline_misses},
            {"fps", settings_.Snapshot().fps}}}};
}

}  // namespace videoservice
