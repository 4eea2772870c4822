#include "videoservice/service_config.h"

#include <cstdlib>
#include <fstream>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

long ParseInteger(const std::string& name, const std::string& text, long lo, long hi) {
  size_t used = 0;
  long value = 0;
  try {
    value = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw ConfigError(name + " must be an integer, got '" + text + "'");
  if (value < lo || value > hi)
    throw ConfigError(name + " = " + text + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return value;
}

uint16_t ParsePort(const std::string& name, const std::string& text) {
  return static_cast<uint16_t>(ParseInteger(name, text, 0, 65535));
}

SourceMode ParseSourceMode(const std::string& text) {
  if (text == "synthetic") return SourceMode::kSynthetic;
  if (text == "capture") return SourceMode::kCapture;
  throw ConfigError("source must be 'synthetic' or 'capture', got '" + text + "'");
}

FrameGeometry GeometryFromJson(const nlohmann::json& j, const std::string& key) {
  if (!j.is_object() || !j.contains("width") || !j.contains("height"))
    throw ConfigError(key + " needs width and height");
  return FrameGeometry::Packed(j.at("width").get<int>(), j.at("height").get<int>());
}

template <typename T>
T Get(const nlohmann::json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

void ServiceConfig::Validate() const {
  source.Validate();
  settings.Validate();
  multipart.Validate();
  if (max_clients < 1) throw ConfigError("max_clients must be at least 1");
  if (mpjpeg_queue_parts < 1) throw ConfigError("mpjpeg_queue_parts must be at least 1");
  if (h264_queue_bytes < 1) throw ConfigError("h264_queue_bytes must be at least 1");
  // Each tick holds two frames and two encoded units.
  if (pool_buffers < 4) throw ConfigError("pool_buffers must be at least 4");
  if (bandwidth_window.count() <= 0) throw ConfigError("bandwidth_window_ms must be positive");
}

nlohmann::json ServiceConfig::ToJson() const {
  return {{"source", source.mode == SourceMode::kCapture ? "capture" : "synthetic"},
          {"hi", {{"width", source.hi.width}, {"height", source.hi.height}}},
          {"lo", {{"width", source.lo.width}, {"height", source.lo.height}}},
          {"fps", settings.fps},
          {"jpeg_quality", settings.jpeg_quality},
          {"brightness", settings.brightness},
          {"contrast", settings.contrast},
          {"jpeg_encoder", videoservice::ToString(jpeg_encoder)},
          {"h264_encoder", videoservice::ToString(h264_encoder)},
          {"fallback_to_software", fallback_to_software},
          {"bind_address", bind_address},
          {"h264_port", h264_port},
          {"mpjpeg_port", mpjpeg_port},
          {"control_port", control_port},
          {"boundary", multipart.boundary},
          {"timestamp_header", multipart.include_timestamp_header},
          {"max_clients", max_clients},
          {"mpjpeg_queue_parts", mpjpeg_queue_parts},
          {"h264_queue_bytes", h264_queue_bytes},
          {"send_buffer_bytes", send_buffer_bytes},
          {"pool_buffers", pool_buffers},
          {"bandwidth_window_ms", bandwidth_window.count()},
          {"console_dir", console_dir}};
}

void ApplyJson(ServiceConfig& c, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "source") c.source.mode = ParseSourceMode(Get<std::string>(doc, key));
    else if (key == "hi") c.source.hi = GeometryFromJson(value, key);
    else if (key == "lo") c.source.lo = GeometryFromJson(value, key);
    else if (key == "fps") c.settings.fps = Get<int>(doc, key);
    else if (key == "jpeg_quality") c.settings.jpeg_quality = Get<int>(doc, key);
    else if (key == "brightness") c.settings.brightness = Get<double>(doc, key);
    else if (key == "contrast") c.settings.contrast = Get<double>(doc, key);
    else if (key == "jpeg_encoder") c.jpeg_encoder = ParseEncoderKind(Get<std::string>(doc, key));
    else if (key == "h264_encoder") c.h264_encoder = ParseEncoderKind(Get<std::string>(doc, key));
    else if (key == "fallback_to_software") c.fallback_to_software = Get<bool>(doc, key);
    else if (key == "bind_address") c.bind_address = Get<std::string>(doc, key);
    else if (key == "h264_port") c.h264_port = Get<uint16_t>(doc, key);
    else if (key == "mpjpeg_port") c.mpjpeg_port = Get<uint16_t>(doc, key);
    else if (key == "control_port") c.control_port = Get<uint16_t>(doc, key);
    else if (key == "boundary") c.multipart.boundary = Get<std::string>(doc, key);
    else if (key == "timestamp_header") c.multipart.include_timestamp_header = Get<bool>(doc, key);
    else if (key == "max_clients") c.max_clients = Get<size_t>(doc, key);
    else if (key == "mpjpeg_queue_parts") c.mpjpeg_queue_parts = Get<size_t>(doc, key);
    else if (key == "h264_queue_bytes") c.h264_queue_bytes = Get<size_t>(doc, key);
    else if (key == "send_buffer_bytes") c.send_buffer_bytes = Get<int>(doc, key);
    else if (key == "pool_buffers") c.pool_buffers = Get<size_t>(doc, key);
    else if (key == "bandwidth_window_ms") c.bandwidth_window = std::chrono::milliseconds(Get<long>(doc, key));
    else if (key == "console_dir") c.console_dir = Get<std::string>(doc, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.source.fps = c.settings.fps;
}

EnvLookup ProcessEnvironment() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* value = std::getenv(name.c_str());
    if (value == nullptr) return std::nullopt;
    return std::string(value);
  };
}

void ApplyEnvironment(ServiceConfig& c, const EnvLookup& env) {
  if (auto v = env("VIDEOSERVICE_JPEG_QUALITY"))
    c.settings.jpeg_quality = static_cast<int>(ParseInteger("VIDEOSERVICE_JPEG_QUALITY", *v, 0, 95));
  if (auto v = env("VIDEOSERVICE_JPEG_ENCODER")) c.jpeg_encoder = ParseEncoderKind(*v);
  if (auto v = env("VIDEOSERVICE_H264_PORT")) c.h264_port = ParsePort("VIDEOSERVICE_H264_PORT", *v);
  if (auto v = env("VIDEOSERVICE_MPJPEG_PORT")) c.mpjpeg_port = ParsePort("VIDEOSERVICE_MPJPEG_PORT", *v);
  if (auto v = env("VIDEOSERVICE_CONTROL_PORT")) c.control_port = ParsePort("VIDEOSERVICE_CONTROL_PORT", *v);
  if (auto v = env("VIDEOSERVICE_FPS")) c.settings.fps = static_cast<int>(ParseInteger("VIDEOSERVICE_FPS", *v, 1, 120));
  if (auto v = env("VIDEOSERVICE_SOURCE")) c.source.mode = ParseSourceMode(*v);
  c.source.fps = c.settings.fps;
}

ServiceConfig LoadServiceConfig(const std::optional<std::string>& path, const EnvLookup& env) {
  ServiceConfig config;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + *path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config file " + *path + ": " + e.what());
    }
    ApplyJson(config, doc);
  }
  ApplyEnvironment(config, env);
  config.Validate();
  return config;
}

}  // namespace videoservice
