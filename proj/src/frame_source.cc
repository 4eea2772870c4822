#include "videoservice/frame_source.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

constexpr int kLumaPeriod = 220;
constexpr int kChromaPeriod = 225;

std::array<uint8_t, 256> LumaCurve(const CameraSettings& settings) {
  std::array<uint8_t, 256> curve{};
  for (int y = 0; y < 256; ++y) {
    const double adjusted = (y - 128) * settings.contrast + 128.0 + settings.brightness * 100.0;
    const long rounded = std::lround(adjusted);
    curve[y] = static_cast<uint8_t>(std::clamp<long>(rounded, 16, 235));
  }
  return curve;
}

class SyntheticSource : public FrameSource {
 public:
  SyntheticSource(const SourceConfig& config, BufferPool& pool)
      : config_(config), pool_(pool), start_(std::chrono::steady_clock::now()) {}

  FramePair NextFramePair(const CameraSettings& settings) override {
    LeaseGuard hi(pool_, pool_.Acquire(config_.hi.frame_size()));
    LeaseGuard lo(pool_, pool_.Acquire(config_.lo.frame_size()));

    const uint64_t seq = next_seq_;
    const auto timestamp = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start_);
    RenderSynthetic(seq, config_.hi, settings, pool_.MapView(hi.get()));
    RenderSynthetic(seq, config_.lo, settings, pool_.MapView(lo.get()));
    ++next_seq_;

    return {{config_.hi, seq, timestamp, hi.Detach()}, {config_.lo, seq, timestamp, lo.Detach()}};
  }

  const SourceConfig& config() const override { return config_; }

 private:
  SourceConfig config_;
  BufferPool& pool_;
  std::chrono::steady_clock::time_point start_;
  uint64_t next_seq_ = 0;
};

}  // namespace

void SourceConfig::Validate() const {
  hi.Validate();
  lo.Validate();
  if (fps < CameraSettings::kMinFps || fps > CameraSettings::kMaxFps)
    throw ConfigError("source fps " + std::to_string(fps) + " out of range [1, 120]");
}

std::unique_ptr<FrameSource> OpenSource(const SourceConfig& config, BufferPool& pool) {
  config.Validate();
  if (config.mode == SourceMode::kCapture)
    throw UnavailableError("capture backend is not available in this build; use the synthetic source");
  if (std::max(config.hi.frame_size(), config.lo.frame_size()) > pool.max_buffer_size())
    throw ConfigError("buffer pool slots too small for the configured frame geometry");
  return std::make_unique<SyntheticSource>(config, pool);
}

void RenderSynthetic(uint64_t seq, const FrameGeometry& g, const CameraSettings& settings,
                     std::span<uint8_t> dst) {
  if (dst.size() < g.frame_size()) throw ContractError("destination smaller than frame");
  const auto curve = LumaCurve(settings);

  const int luma_phase = static_cast<int>((4 * (seq % 55)) % kLumaPeriod);
  for (int y = 0; y < g.height; ++y) {
    uint8_t* row = dst.data() + static_cast<size_t>(y) * g.y_stride;
    int v = (y + luma_phase) % kLumaPeriod;
    for (int x = 0; x < g.width; ++x) {
      row[x] = curve[16 + v];
      if (++v == kLumaPeriod) v = 0;
    }
  }

  const int chroma_phase = static_cast<int>((2 * (seq % kChromaPeriod)) % kChromaPeriod);
  uint8_t* u_plane = dst.data() + g.y_size();
  uint8_t* v_plane = u_plane + g.c_size();
  for (int cy = 0; cy < g.chroma_height(); ++cy) {
    uint8_t* u_row = u_plane + static_cast<size_t>(cy) * g.c_stride;
    uint8_t* v_row = v_plane + static_cast<size_t>(cy) * g.c_stride;
    const auto v_value = static_cast<uint8_t>(16 + (cy + chroma_phase) % kChromaPeriod);
    int u = chroma_phase;
    for (int cx = 0; cx < g.chroma_width(); ++cx) {
      u_row[cx] = static_cast<uint8_t>(16 + u);
      v_row[cx] = v_value;
      if (++u == kChromaPeriod) u = 0;
    }
  }
}

Yuv420Image SynthFrame(uint64_t seq, const FrameGeometry& geometry, const CameraSettings& settings) {
  geometry.Validate();
  Yuv420Image image(geometry);
  RenderSynthetic(seq, geometry, settings, image.data);
  return image;
}

}  // namespace videoservice
