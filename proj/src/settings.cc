#include "videoservice/settings.h"

#include <cmath>
#include <sstream>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

std::string RangeText(double lo, double hi) {
  std::ostringstream out;
  out << "[" << lo << ", " << hi << "]";
  return out.str();
}

double RequireNumber(const nlohmann::json& value, const std::string& key, double lo, double hi) {
  if (!value.is_number())
    throw SettingsValidationError(key, key + " must be a number in " + RangeText(lo, hi));
  const double v = value.get<double>();
  if (!std::isfinite(v) || v < lo || v > hi)
    throw SettingsValidationError(key, key + " out of range, legal range is " + RangeText(lo, hi));
  return v;
}

int RequireInteger(const nlohmann::json& value, const std::string& key, int lo, int hi) {
  const bool integral = value.is_number_integer() ||
                        (value.is_number_float() && std::floor(value.get<double>()) == value.get<double>());
  if (!integral)
    throw SettingsValidationError(key, key + " must be an integer in " + RangeText(lo, hi));
  const double v = value.get<double>();
  if (v < lo || v > hi)
    throw SettingsValidationError(key, key + " out of range, legal range is " + RangeText(lo, hi));
  return static_cast<int>(v);
}

}  // namespace

void CameraSettings::Validate() const {
  if (!(brightness >= kMinBrightness && brightness <= kMaxBrightness))
    throw ConfigError("brightness out of range " + RangeText(kMinBrightness, kMaxBrightness));
  if (!(contrast >= kMinContrast && contrast <= kMaxContrast))
    throw ConfigError("contrast out of range " + RangeText(kMinContrast, kMaxContrast));
  if (jpeg_quality < kMinQuality || jpeg_quality > kMaxQuality)
    throw ConfigError("jpeg quality " + std::to_string(jpeg_quality) + " out of range [0, 95]");
  if (fps < kMinFps || fps > kMaxFps)
    throw ConfigError("fps " + std::to_string(fps) + " out of range [1, 120]");
}

nlohmann::json ToJson(const CameraSettings& s) {
  return {{"brightness", s.brightness},
          {"contrast", s.contrast},
          {"jpeg_quality", s.jpeg_quality},
          {"fps", s.fps},
          {"version", s.version}};
}

SettingsStore::SettingsStore(CameraSettings initial) : current_(initial) { current_.Validate(); }

CameraSettings SettingsStore::Snapshot() const {
  std::lock_guard lock(mutex_);
  return current_;
}

CameraSettings SettingsStore::ApplyPatch(const nlohmann::json& patch) {
  if (!patch.is_object()) throw SettingsValidationError("", "settings body must be a JSON object");

  std::lock_guard lock(mutex_);
  if (patch.empty()) return current_;
  CameraSettings next = current_;
  for (const auto& [key, value] : patch.items()) {
    if (key == "brightness") {
      next.brightness = RequireNumber(value, key, CameraSettings::kMinBrightness, CameraSettings::kMaxBrightness);
    } else if (key == "contrast") {
      next.contrast = RequireNumber(value, key, CameraSettings::kMinContrast, CameraSettings::kMaxContrast);
    } else if (key == "jpeg_quality") {
      next.jpeg_quality = RequireInteger(value, key, CameraSettings::kMinQuality, CameraSettings::kMaxQuality);
    } else if (key == "fps") {
      next.fps = RequireInteger(value, key, CameraSettings::kMinFps, CameraSettings::kMaxFps);
    } else {
      throw SettingsValidationError(key, "unknown settings key '" + key + "'");
    }
  }
  ++next.version;
  current_ = next;
  return current_;
}

}  // namespace videoservice
