#include "videoservice/frame.h"

#include <string>

#include "videoservice/errors.h"

namespace videoservice {

FrameGeometry FrameGeometry::Packed(int width, int height) {
  return {width, height, width, width / 2};
}

void FrameGeometry::Validate() const {
  if (width <= 0 || height <= 0)
    throw ConfigError("frame geometry must be positive, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  if (width % 2 != 0 || height % 2 != 0)
    throw ConfigError("frame geometry must be even for 4:2:0, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  if (y_stride < width)
    throw ConfigError("y_stride " + std::to_string(y_stride) + " smaller than width " +
                      std::to_string(width));
  if (c_stride < width / 2)
    throw ConfigError("c_stride " + std::to_string(c_stride) + " smaller than chroma width " +
                      std::to_string(width / 2));
}

bool SamePixels(const Yuv420View& a, const Yuv420View& b) {
  if (a.geometry.width != b.geometry.width || a.geometry.height != b.geometry.height) return false;
  const int w = a.geometry.width;
  const int h = a.geometry.height;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (a.Y(x, y) != b.Y(x, y)) return false;
  for (int y = 0; y < h / 2; ++y)
    for (int x = 0; x < w / 2; ++x)
      if (a.U(x, y) != b.U(x, y) || a.V(x, y) != b.V(x, y)) return false;
  return true;
}

}  // namespace videoservice
