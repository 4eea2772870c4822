#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>

#include "videoservice/buffer_pool.h"
#include "videoservice/frame.h"
#include "videoservice/settings.h"

namespace videoservice {

enum class SourceMode { kSynthetic, kCapture };

struct SourceConfig {
  FrameGeometry hi = FrameGeometry::Packed(1920, 1080);
  FrameGeometry lo = FrameGeometry::Packed(800, 600);
  int fps = 30;
  SourceMode mode = SourceMode::kSynthetic;

  void Validate() const;
};

// One planar YUV420 image held in the buffer pool. The frame does not own
// its lease; whoever received it from the source releases it.
struct RawFrame {
  FrameGeometry geometry;
  uint64_t seq = 0;
  std::chrono::nanoseconds timestamp{0};
  BufferLease lease;
};

// The same scene at both output resolutions, captured on the same tick.
struct FramePair {
  RawFrame hi;
  RawFrame lo;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;

  // Produces the next pair, both rendered at native size into pool buffers.
  // Throws ExhaustedError when the pool cannot hold both frames; nothing is
  // leased and the sequence counter does not advance in that case.
  virtual FramePair NextFramePair(const CameraSettings& settings) = 0;

  virtual const SourceConfig& config() const = 0;
};

// Synthetic mode needs no hardware. Capture mode is the boundary for a real
// camera backend, which this build does not contain: UnavailableError.
std::unique_ptr<FrameSource> OpenSource(const SourceConfig& config, BufferPool& pool);

// The synthetic test pattern, before the luma adjustment:
//   Y(x, y)   = 16 + ((x + y + 4 seq) mod 220)
//   U(cx, cy) = 16 + ((cx + 2 seq) mod 225)
//   V(cx, cy) = 16 + ((cy + 2 seq) mod 225)
// Luma is then mapped through
//   Y' = clamp(16, 235, round((Y - 128) * contrast + 128 + 100 * brightness)).
// `dst` must hold geometry.frame_size() bytes; stride padding is left untouched.
void RenderSynthetic(uint64_t seq, const FrameGeometry& geometry, const CameraSettings& settings,
                     std::span<uint8_t> dst);

Yuv420Image SynthFrame(uint64_t seq, const FrameGeometry& geometry, const CameraSettings& settings);

}  // namespace videoservice
