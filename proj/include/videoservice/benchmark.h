#pragma once

#include <string>

#include "json.hpp"
#include "videoservice/frame.h"

namespace videoservice {

// Hardware JPEG encode time per 800x600 frame that the software numbers are
// compared against; printed, never asserted.
inline constexpr double kReferenceHardwareJpegMs = 4.0;

struct BenchmarkReport {
  std::string encoder;
  FrameGeometry geometry;
  int iterations = 0;
  double total_ms = 0;
  double mean_ms_per_frame = 0;
  double p95_ms = 0;
  double max_sustainable_fps = 0;

  nlohmann::json ToJson() const;
  std::string ToText() const;
};

// encoder: software-jpeg | hardware-jpeg | software-h264 | hardware-h264.
// Frames are rendered before timing starts; only Submit + Collect of each
// encode is timed. Hardware kinds throw UnavailableError, unknown names and
// iterations < 1 throw ConfigError.
BenchmarkReport RunBenchmark(const std::string& encoder, const FrameGeometry& geometry, int iterations,
                             int quality = 70);

}  // namespace videoservice
