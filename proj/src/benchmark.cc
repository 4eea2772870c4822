#include "videoservice/benchmark.h"

#include <algorithm>
#include <chrono>
#include <memory>
#include <vector>

#include <fmt/format.h>

#include "videoservice/buffer_pool.h"
#include "videoservice/encoder_backend.h"
#include "videoservice/errors.h"
#include "videoservice/frame_source.h"

namespace videoservice {
namespace {

// Distinct pre-rendered frames cycled through during the run.
constexpr int kFrameVariety = 4;

}  // namespace

nlohmann::json BenchmarkReport::ToJson() const {
  return {{"encoder", encoder},
          {"width", geometry.width},
          {"height", geometry.height},
          {"iterations", iterations},
          {"total_ms", total_ms},
          {"mean_ms_per_frame", mean_ms_per_frame},
          {"p95_ms", p95_ms},
          {"max_sustainable_fps", max_sustainable_fps},
          {"reference_hardware_jpeg_ms", kReferenceHardwareJpegMs}};
}

std::string BenchmarkReport::ToText() const {
  return fmt::format(
      "encoder            {}\n"
      "geometry           {}x{}\n"
      "iterations         {}\n"
      "total_ms           {:.3f}\n"
      "mean_ms_per_frame  {:.3f}\n"
      "p95_ms             {:.3f}\n"
      "max_sustainable_fps {:.1f}\n"
      "reference: hardware JPEG encoder ~{:.0f} ms/frame at 800x600\n",
      encoder, geometry.width, geometry.height, iterations, total_ms, mean_ms_per_frame, p95_ms,
      max_sustainable_fps, kReferenceHardwareJpegMs);
}

BenchmarkReport RunBenchmark(const std::string& encoder, const FrameGeometry& geometry, int iterations,
                             int quality) {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  geometry.Validate();

  const bool is_jpeg = encoder == "software-jpeg" || encoder == "hardware-jpeg";
  const bool is_h264 = encoder == "software-h264" || encoder == "hardware-h264";
  if (!is_jpeg && !is_h264)
    throw ConfigError("unknown encoder '" + encoder +
                      "' (software-jpeg, hardware-jpeg, software-h264, hardware-h264)");
  const EncoderKind kind = encoder.starts_with("hardware") ? EncoderKind::kHardware : EncoderKind::kSoftware;

  const size_t slot = std::max(geometry.frame_size(), IpcmChunkBound(geometry.width, geometry.height));
  BufferPool pool(kFrameVariety + EncoderBackend::kDefaultDepth + 1, slot);
  std::unique_ptr<EncoderBackend> backend =
      is_jpeg ? OpenJpegBackend(kind, pool, quality) : OpenH264Backend(kind, pool, geometry);

  CameraSettings settings;
  settings.jpeg_quality = quality;
  std::vector<LeaseGuard> inputs;
  std::vector<RawFrame> frames;
  for (int i = 0; i < kFrameVariety; ++i) {
    const BufferLease lease = pool.Acquire(geometry.frame_size());
    RenderSynthetic(static_cast<uint64_t>(i), geometry, settings, pool.MapView(lease));
    inputs.emplace_back(pool, lease);
    frames.push_back({geometry, static_cast<uint64_t>(i), std::chrono::nanoseconds(0), lease});
  }

  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    const RawFrame& frame = frames[static_cast<size_t>(i % kFrameVariety)];
    const auto started = std::chrono::steady_clock::now();
    backend->Submit(frame);
    EncodedUnit unit = backend->Collect();
    const auto stopped = std::chrono::steady_clock::now();
    pool.Release(unit.payload);
    samples.push_back(std::chrono::duration<double, std::milli>(stopped - started).count());
  }

  BenchmarkReport report;
  report.encoder = encoder;
  report.geometry = geometry;
  report.iterations = iterations;
  for (double s : samples) report.total_ms += s;
  report.mean_ms_per_frame = report.total_ms / iterations;
  std::sort(samples.begin(), samples.end());
  report.p95_ms = samples[static_cast<size_t>(std::max(1, (iterations * 95 + 99) / 100)) - 1];
  report.max_sustainable_fps = report.mean_ms_per_frame > 0 ? 1000.0 / report.mean_ms_per_frame : 0;
  return report;
}

}  // namespace videoservice
