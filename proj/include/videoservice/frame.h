#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace videoservice {

// Planar YUV420 layout: Y plane (y_stride * height), then U, then V
// (c_stride * height / 2 each).
struct FrameGeometry {
  int width = 0;
  int height = 0;
  int y_stride = 0;
  int c_stride = 0;

  // Tightly packed strides (width, width / 2).
  static FrameGeometry Packed(int width, int height);

  int chroma_width() const { return width / 2; }
  int chroma_height() const { return height / 2; }
  size_t y_size() const { return static_cast<size_t>(y_stride) * height; }
  size_t c_size() const { return static_cast<size_t>(c_stride) * (height / 2); }
  size_t frame_size() const { return y_size() + 2 * c_size(); }

  // Throws ConfigError unless width/height are positive and even and the
  // strides cover a row.
  void Validate() const;

  bool operator==(const FrameGeometry&) const = default;
};

// Read-only view of one YUV420 image living somewhere else (usually a
// mapped pool buffer).
struct Yuv420View {
  FrameGeometry geometry;
  std::span<const uint8_t> data;

  std::span<const uint8_t> y() const { return data.subspan(0, geometry.y_size()); }
  std::span<const uint8_t> u() const { return data.subspan(geometry.y_size(), geometry.c_size()); }
  std::span<const uint8_t> v() const {
    return data.subspan(geometry.y_size() + geometry.c_size(), geometry.c_size());
  }
  uint8_t Y(int x, int y) const { return data[static_cast<size_t>(y) * geometry.y_stride + x]; }
  uint8_t U(int cx, int cy) const {
    return data[geometry.y_size() + static_cast<size_t>(cy) * geometry.c_stride + cx];
  }
  uint8_t V(int cx, int cy) const {
    return data[geometry.y_size() + geometry.c_size() + static_cast<size_t>(cy) * geometry.c_stride + cx];
  }
};

// Owning YUV420 image, used where a frame leaves the pool (decoders,
// test fixtures, benchmark inputs).
struct Yuv420Image {
  FrameGeometry geometry;
  std::vector<uint8_t> data;

  Yuv420Image() = default;
  explicit Yuv420Image(const FrameGeometry& g) : geometry(g), data(g.frame_size()) {}

  Yuv420View view() const { return {geometry, data}; }

  uint8_t& Y(int x, int y) { return data[static_cast<size_t>(y) * geometry.y_stride + x]; }
  uint8_t& U(int cx, int cy) {
    return data[geometry.y_size() + static_cast<size_t>(cy) * geometry.c_stride + cx];
  }
  uint8_t& V(int cx, int cy) {
    return data[geometry.y_size() + geometry.c_size() + static_cast<size_t>(cy) * geometry.c_stride + cx];
  }
};

// True when both images hold the same samples inside the visible
// width x height window (padding bytes are ignored).
bool SamePixels(const Yuv420View& a, const Yuv420View& b);

}  // namespace videoservice
