#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "videoservice/frame.h"

namespace videoservice {

// Reference quantization tables in natural (row-major) order.
extern const std::array<uint8_t, 64> kBaseLumaQuant;
extern const std::array<uint8_t, 64> kBaseChromaQuant;

// Maps a coefficient's zigzag position to its natural-order index.
extern const std::array<uint8_t, 64> kZigzagToNatural;

// Quantization tables in natural order.
struct QuantTables {
  std::array<uint8_t, 64> luma{};
  std::array<uint8_t, 64> chroma{};
  int quality = 0;
};

// IJG-style scaling of the reference tables for quality 0..95:
//   q = max(1, quality); s = q < 50 ? 5000 / q : 200 - 2q
//   entry = clamp(1, 255, (base * s + 50) / 100)
// Quality outside [0, 95] throws ConfigError.
QuantTables ScaledQuantTables(int quality);

struct JpegImage {
  std::vector<uint8_t> bytes;
  int width = 0;
  int height = 0;
  int quality = 0;
};

// Baseline sequential JFIF at 4:2:0 with the reference Huffman tables.
// Samples are taken as-is (no range expansion); partial edge blocks are
// padded by replicating the last column/row.
JpegImage EncodeJpeg(const Yuv420View& frame, const QuantTables& tables);

}  // namespace videoservice
