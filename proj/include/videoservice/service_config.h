#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"
#include "videoservice/encoder_backend.h"
#include "videoservice/frame_source.h"
#include "videoservice/mpjpeg.h"
#include "videoservice/settings.h"

namespace videoservice {

struct ServiceConfig {
  SourceConfig source;
  // Initial camera settings; fps here drives the loop and source.fps.
  CameraSettings settings;
  EncoderKind jpeg_encoder = EncoderKind::kSoftware;
  EncoderKind h264_encoder = EncoderKind::kSoftware;
  // Use the software encoder when the configured hardware one is missing.
  bool fallback_to_software = true;

  std::string bind_address = "0.0.0.0";
  uint16_t h264_port = 8888;
  uint16_t mpjpeg_port = 8887;
  uint16_t control_port = 8886;

  MultipartConfig multipart;
  size_t max_clients = 32;
  size_t mpjpeg_queue_parts = 2;
  size_t h264_queue_bytes = 8u << 20;
  int send_buffer_bytes = 0;

  size_t pool_buffers = 8;
  std::chrono::milliseconds bandwidth_window{5000};
  // Directory holding the web console (index.html); empty or missing serves
  // a placeholder page.
  std::string console_dir;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  nlohmann::json ToJson() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;

// Reads the process environment.
EnvLookup ProcessEnvironment();

// Overlays the keys present in `doc` (same names as ToJson). Unknown keys
// throw ConfigError.
void ApplyJson(ServiceConfig& config, const nlohmann::json& doc);

// VIDEOSERVICE_JPEG_QUALITY, VIDEOSERVICE_JPEG_ENCODER, VIDEOSERVICE_H264_PORT,
// VIDEOSERVICE_MPJPEG_PORT, VIDEOSERVICE_CONTROL_PORT, VIDEOSERVICE_FPS,
// VIDEOSERVICE_SOURCE. Malformed values throw ConfigError.
void ApplyEnvironment(ServiceConfig& config, const EnvLookup& env);

// defaults < config file < environment. Command-line flags are applied on
// top by the caller. The result is validated.
ServiceConfig LoadServiceConfig(const std::optional<std::string>& path, const EnvLookup& env);

}  // namespace videoservice
