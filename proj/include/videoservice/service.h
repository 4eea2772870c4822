#pragma once

#include <memory>
#include <thread>

#include "json.hpp"
#include "videoservice/buffer_pool.h"
#include "videoservice/control_api.h"
#include "videoservice/pipeline.h"
#include "videoservice/service_config.h"
#include "videoservice/settings.h"
#include "videoservice/stream_server.h"

namespace videoservice {

// The assembled service: pool, source, encoders, both stream servers, the
// control API and the pipeline thread.
class Service {
 public:
  // Binds every port; throws StartupError, ConfigError, or UnavailableError
  // (hardware encoder without fallback, capture source).
  explicit Service(const ServiceConfig& config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Starts the paced loop on its own thread.
  void Start();
  // Stops the loop, then the servers. Idempotent.
  void Stop();
  bool running() const { return loop_.joinable(); }

  uint16_t h264_port() const { return h264_server_->port(); }
  uint16_t mpjpeg_port() const { return mpjpeg_server_->port(); }
  uint16_t control_port() const { return control_->port(); }

  const ServiceConfig& config() const { return config_; }
  BufferPool& pool() { return *pool_; }
  SettingsStore& settings() { return settings_; }
  Pipeline& pipeline() { return *pipeline_; }
  StreamServer& h264_server() { return *h264_server_; }
  StreamServer& mpjpeg_server() { return *mpjpeg_server_; }

  nlohmann::json Stats() const;

 private:
  ServiceConfig config_;
  SettingsStore settings_;
  std::unique_ptr<BufferPool> pool_;
  std::unique_ptr<StreamServer> h264_server_;
  std::unique_ptr<StreamServer> mpjpeg_server_;
  std::unique_ptr<Pipeline> pipeline_;
  std::unique_ptr<ControlApi> control_;
  std::jthread loop_;
};

}  // namespace videoservice
