#include "videoservice/service.h"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

ServerConfig MakeServerConfig(const ServiceConfig& c, StreamKind kind) {
  ServerConfig s;
  s.kind = kind;
  s.bind_address = c.bind_address;
  s.port = kind == StreamKind::kH264 ? c.h264_port : c.mpjpeg_port;
  s.max_clients = c.max_clients;
  s.mpjpeg_queue_parts = c.mpjpeg_queue_parts;
  s.h264_queue_bytes = c.h264_queue_bytes;
  s.send_buffer_bytes = c.send_buffer_bytes;
  s.multipart = c.multipart;
  return s;
}

template <typename Open>
std::unique_ptr<EncoderBackend> OpenWithFallback(EncoderKind kind, bool fallback, const char* what, Open open) {
  try {
    return open(kind);
  } catch (const UnavailableError& e) {
    if (kind == EncoderKind::kSoftware || !fallback) throw;
    spdlog::warn("{}; using the software {} encoder", e.what(), what);
    return open(EncoderKind::kSoftware);
  }
}

CameraSettings InitialSettings(const ServiceConfig& config) {
  CameraSettings s = config.settings;
  s.version = 0;
  return s;
}

}  // namespace

Service::Service(const ServiceConfig& config) : config_(config), settings_(InitialSettings(config)) {
  config_.source.fps = config_.settings.fps;
  config_.Validate();

  const size_t slot = std::max({config_.source.hi.frame_size(), config_.source.lo.frame_size(),
                                IpcmChunkBound(config_.source.hi.width, config_.source.hi.height)});
  pool_ = std::make_unique<BufferPool>(config_.pool_buffers, slot);

  auto source = OpenSource(config_.source, *pool_);
  auto h264 = OpenWithFallback(config_.h264_encoder, config_.fallback_to_software, "H.264",
                               [&](EncoderKind k) { return OpenH264Backend(k, *pool_, config_.source.hi); });
  auto jpeg = OpenWithFallback(config_.jpeg_encoder, config_.fallback_to_software, "JPEG", [&](EncoderKind k) {
    return OpenJpegBackend(k, *pool_, config_.settings.jpeg_quality);
  });

  h264_server_ = StreamServer::Listen(MakeServerConfig(config_, StreamKind::kH264));
  mpjpeg_server_ = StreamServer::Listen(MakeServerConfig(config_, StreamKind::kMpjpeg));
  h264_server_->SetStreamHeader(h264->StreamHeader());

  PipelineOptions options;
  options.multipart = config_.multipart;
  options.bandwidth_window = config_.bandwidth_window;
  pipeline_ = std::make_unique<Pipeline>(*pool_, settings_, std::move(source), std::move(h264), std::move(jpeg),
                                         h264_server_.get(), mpjpeg_server_.get(), options);

  ControlApiConfig api;
  api.bind_address = config_.bind_address;
  api.port = config_.control_port;
  api.console_dir = config_.console_dir;
  control_ = ControlApi::Listen(api, settings_, [this] { return Stats(); }, mpjpeg_server_.get());

  spdlog::info("h264 on port {}, mpjpeg on port {}, control on port {}", h264_port(), mpjpeg_port(),
               control_port());
}

Service::~Service() { Stop(); }

void Service::Start() {
  if (loop_.joinable()) return;
  loop_ = std::jthread([this](std::stop_token stop) {
    try {
      pipeline_->Run(stop);
    } catch (const std::exception& e) {
      spdlog::error("pipeline loop stopped: {}", e.what());
    }
  });
}

void Service::Stop() {
  if (loop_.joinable()) {
    loop_.request_stop();
    loop_.join();
  }
  if (control_) control_->Stop();
  if (mpjpeg_server_) mpjpeg_server_->Stop();
  if (h264_server_) h264_server_->Stop();
}

nlohmann::json Service::Stats() const { return pipeline_->StatsJson(); }

}  // namespace videoservice
