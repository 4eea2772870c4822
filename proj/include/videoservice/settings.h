#pragma once

#include <cstdint>
#include <mutex>
#include <string>

#include "json.hpp"

namespace videoservice {

struct CameraSettings {
  static constexpr double kMinBrightness = -1.0;
  static constexpr double kMaxBrightness = 1.0;
  static constexpr double kMinContrast = 0.0;
  static constexpr double kMaxContrast = 2.0;
  static constexpr int kMinQuality = 0;
  static constexpr int kMaxQuality = 95;
  static constexpr int kMinFps = 1;
  static constexpr int kMaxFps = 120;

  double brightness = 0.0;
  double contrast = 1.0;
  int jpeg_quality = 70;
  int fps = 30;
  uint64_t version = 0;

  // Throws ConfigError naming the first out-of-range field.
  void Validate() const;

  bool operator==(const CameraSettings&) const = default;
};

nlohmann::json ToJson(const CameraSettings& settings);

// A rejected settings change. `key` names the offending field when there is one.
class SettingsValidationError : public std::runtime_error {
 public:
  SettingsValidationError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Versioned settings snapshot: one writer commits whole versions, any number
// of readers copy complete snapshots.
class SettingsStore {
 public:
  explicit SettingsStore(CameraSettings initial = {});

  CameraSettings Snapshot() const;

  // Applies a partial JSON object ({"brightness": 0.2, ...}) as one new
  // version. Either every key is valid and applied, or nothing changes and
  // SettingsValidationError is thrown.
  CameraSettings ApplyPatch(const nlohmann::json& patch);

 private:
  mutable std::mutex mutex_;
  CameraSettings current_;
};

}  // namespace videoservice
