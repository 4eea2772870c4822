#include "videoservice/jpeg_encoder.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "videoservice/errors.h"

namespace videoservice {

const std::array<uint8_t, 64> kBaseLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

const std::array<uint8_t, 64> kBaseChromaQuant = {
    17, 18, 24, 47, 99, 99, 99, 99,  //
    18, 21, 26, 66, 99, 99, 99, 99,  //
    24, 26, 56, 99, 99, 99, 99, 99,  //
    47, 66, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,
};

const std::array<uint8_t, 64> kZigzagToNatural = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  //
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,  //
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,  //
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
};

namespace {

// Reference Huffman tables: code counts per length 1..16, then symbols.
struct HuffmanSpec {
  std::array<uint8_t, 16> counts;
  std::vector<uint8_t> symbols;
};

const HuffmanSpec kDcLuma = {{0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0},
                             {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};

const HuffmanSpec kDcChroma = {{0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0},
                               {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};

const HuffmanSpec kAcLuma = {
    {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d},
    {0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61,
     0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52,
     0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25,
     0x26, 0x27, 0x28, 0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
     0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64,
     0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83,
     0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99,
     0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
     0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3,
     0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8,
     0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa}};

const HuffmanSpec kAcChroma = {
    {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77},
    {0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61,
     0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33,
     0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18,
     0x19, 0x1a, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
     0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63,
     0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a,
     0x82, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97,
     0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
     0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca,
     0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7,
     0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa}};

struct HuffmanCode {
  uint16_t code = 0;
  uint8_t length = 0;
};

using HuffmanTable = std::array<HuffmanCode, 256>;

// Canonical code assignment from the count list.
HuffmanTable BuildTable(const HuffmanSpec& spec) {
  HuffmanTable table{};
  uint16_t code = 0;
  size_t k = 0;
  for (int length = 1; length <= 16; ++length) {
    for (int i = 0; i < spec.counts[length - 1]; ++i) {
      table[spec.symbols[k++]] = {code, static_cast<uint8_t>(length)};
      ++code;
    }
    code <<= 1;
  }
  return table;
}

struct HuffmanSet {
  HuffmanTable dc_luma = BuildTable(kDcLuma);
  HuffmanTable ac_luma = BuildTable(kAcLuma);
  HuffmanTable dc_chroma = BuildTable(kDcChroma);
  HuffmanTable ac_chroma = BuildTable(kAcChroma);
};

const HuffmanSet& Huffman() {
  static const HuffmanSet set;
  return set;
}

// cos_table[u][x] = C(u)/2 * cos((2x + 1) u pi / 16)
struct DctBasis {
  float m[8][8];
  DctBasis() {
    for (int u = 0; u < 8; ++u)
      for (int x = 0; x < 8; ++x) {
        const double cu = u == 0 ? 1.0 / std::numbers::sqrt2 : 1.0;
        m[u][x] = static_cast<float>(cu / 2.0 * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0));
      }
  }
};

const DctBasis& Basis() {
  static const DctBasis basis;
  return basis;
}

void ForwardDct(const float in[64], float out[64]) {
  const auto& c = Basis().m;
  float tmp[64];
  // Rows: tmp[y][u] = sum_x in[y][x] c[u][x]
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      float acc = 0;
      for (int x = 0; x < 8; ++x) acc += in[y * 8 + x] * c[u][x];
      tmp[y * 8 + u] = acc;
    }
  // Columns: out[v][u] = sum_y tmp[y][u] c[v][y]
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      float acc = 0;
      for (int y = 0; y < 8; ++y) acc += tmp[y * 8 + u] * c[v][y];
      out[v * 8 + u] = acc;
    }
}

class EntropyWriter {
 public:
  explicit EntropyWriter(std::vector<uint8_t>& out) : out_(out) {}

  void Put(uint32_t bits, int count) {
    acc_ = (acc_ << count) | (bits & ((1u << count) - 1));
    filled_ += count;
    while (filled_ >= 8) {
      const auto byte = static_cast<uint8_t>(acc_ >> (filled_ - 8));
      out_.push_back(byte);
      if (byte == 0xFF) out_.push_back(0x00);
      filled_ -= 8;
    }
    acc_ &= (1u << filled_) - 1;
  }

  // Pads the final byte with 1-bits.
  void Flush() {
    if (filled_ > 0) Put(0x7F, 8 - filled_);
  }

 private:
  std::vector<uint8_t>& out_;
  uint32_t acc_ = 0;
  int filled_ = 0;
};

int BitLength(int value) {
  int magnitude = value < 0 ? -value : value;
  int n = 0;
  while (magnitude) {
    ++n;
    magnitude >>= 1;
  }
  return n;
}

void EncodeBlock(EntropyWriter& writer, const int coef[64], int& prev_dc, const HuffmanTable& dc,
                 const HuffmanTable& ac) {
  const int diff = coef[0] - prev_dc;
  prev_dc = coef[0];
  const int dc_size = BitLength(diff);
  writer.Put(dc[dc_size].code, dc[dc_size].length);
  if (dc_size) writer.Put(static_cast<uint32_t>(diff < 0 ? diff - 1 : diff), dc_size);

  int run = 0;
  for (int k = 1; k < 64; ++k) {
    const int value = coef[kZigzagToNatural[k]];
    if (value == 0) {
      ++run;
      continue;
    }
    while (run >= 16) {
      writer.Put(ac[0xF0].code, ac[0xF0].length);
      run -= 16;
    }
    const int size = BitLength(value);
    const int symbol = (run << 4) | size;
    writer.Put(ac[symbol].code, ac[symbol].length);
    writer.Put(static_cast<uint32_t>(value < 0 ? value - 1 : value), size);
    run = 0;
  }
  if (run > 0) writer.Put(ac[0x00].code, ac[0x00].length);
}

// Fetches an 8x8 block at (x0, y0), replicating the last row/column past the
// plane edge, and applies the -128 level shift.
void FetchBlock(const uint8_t* plane, int stride, int width, int height, int x0, int y0, float out[64]) {
  for (int y = 0; y < 8; ++y) {
    const uint8_t* row = plane + static_cast<size_t>(std::min(y0 + y, height - 1)) * stride;
    if (x0 + 8 <= width) {
      for (int x = 0; x < 8; ++x) out[y * 8 + x] = static_cast<float>(row[x0 + x]) - 128.0f;
    } else {
      for (int x = 0; x < 8; ++x) out[y * 8 + x] = static_cast<float>(row[std::min(x0 + x, width - 1)]) - 128.0f;
    }
  }
}

void Quantize(const float dct[64], const float reciprocal[64], int out[64]) {
  for (int i = 0; i < 64; ++i) {
    const float q = dct[i] * reciprocal[i];
    out[i] = static_cast<int>(q >= 0 ? q + 0.5f : q - 0.5f);
  }
}

void PutMarker(std::vector<uint8_t>& out, uint8_t marker) {
  out.push_back(0xFF);
  out.push_back(marker);
}

void PutU16(std::vector<uint8_t>& out, int value) {
  out.push_back(static_cast<uint8_t>(value >> 8));
  out.push_back(static_cast<uint8_t>(value & 0xFF));
}

void PutQuantTable(std::vector<uint8_t>& out, int id, const std::array<uint8_t, 64>& table) {
  PutMarker(out, 0xDB);
  PutU16(out, 2 + 1 + 64);
  out.push_back(static_cast<uint8_t>(id));
  for (int k = 0; k < 64; ++k) out.push_back(table[kZigzagToNatural[k]]);
}

void PutHuffmanTable(std::vector<uint8_t>& out, int table_class, int id, const HuffmanSpec& spec) {
  PutMarker(out, 0xC4);
  PutU16(out, static_cast<int>(2 + 1 + 16 + spec.symbols.size()));
  out.push_back(static_cast<uint8_t>((table_class << 4) | id));
  out.insert(out.end(), spec.counts.begin(), spec.counts.end());
  out.insert(out.end(), spec.symbols.begin(), spec.symbols.end());
}

void PutHeaders(std::vector<uint8_t>& out, int width, int height, const QuantTables& tables) {
  PutMarker(out, 0xD8);  // SOI

  PutMarker(out, 0xE0);  // APP0 JFIF 1.01, no density units, no thumbnail
  PutU16(out, 16);
  for (char c : std::string_view("JFIF", 5)) out.push_back(static_cast<uint8_t>(c));
  out.insert(out.end(), {0x01, 0x01, 0x00});
  PutU16(out, 1);
  PutU16(out, 1);
  out.insert(out.end(), {0x00, 0x00});

  PutQuantTable(out, 0, tables.luma);
  PutQuantTable(out, 1, tables.chroma);

  PutMarker(out, 0xC0);  // SOF0
  PutU16(out, 8 + 3 * 3);
  out.push_back(8);
  PutU16(out, height);
  PutU16(out, width);
  out.push_back(3);
  out.insert(out.end(), {1, 0x22, 0});
  out.insert(out.end(), {2, 0x11, 1});
  out.insert(out.end(), {3, 0x11, 1});

  PutHuffmanTable(out, 0, 0, kDcLuma);
  PutHuffmanTable(out, 1, 0, kAcLuma);
  PutHuffmanTable(out, 0, 1, kDcChroma);
  PutHuffmanTable(out, 1, 1, kAcChroma);

  PutMarker(out, 0xDA);  // SOS
  PutU16(out, 6 + 2 * 3);
  out.push_back(3);
  out.insert(out.end(), {1, 0x00});
  out.insert(out.end(), {2, 0x11});
  out.insert(out.end(), {3, 0x11});
  out.insert(out.end(), {0, 63, 0});
}

}  // namespace

QuantTables ScaledQuantTables(int quality) {
  if (quality < 0 || quality > 95)
    throw ConfigError("jpeg quality " + std::to_string(quality) + " out of range [0, 95]");
  const int q = std::max(1, quality);
  const int scale = q < 50 ? 5000 / q : 200 - 2 * q;
  QuantTables tables;
  tables.quality = quality;
  for (int i = 0; i < 64; ++i) {
    tables.luma[i] = static_cast<uint8_t>(std::clamp((kBaseLumaQuant[i] * scale + 50) / 100, 1, 255));
    tables.chroma[i] = static_cast<uint8_t>(std::clamp((kBaseChromaQuant[i] * scale + 50) / 100, 1, 255));
  }
  return tables;
}

JpegImage EncodeJpeg(const Yuv420View& frame, const QuantTables& tables) {
  const FrameGeometry& g = frame.geometry;
  if (g.width > 65535 || g.height > 65535) throw ContractError("frame too large for baseline JPEG");

  JpegImage image;
  image.width = g.width;
  image.height = g.height;
  image.quality = tables.quality;
  auto& out = image.bytes;
  out.reserve(g.frame_size() / 4);
  PutHeaders(out, g.width, g.height, tables);

  float luma_recip[64];
  float chroma_recip[64];
  for (int i = 0; i < 64; ++i) {
    luma_recip[i] = 1.0f / tables.luma[i];
    chroma_recip[i] = 1.0f / tables.chroma[i];
  }

  const auto& huffman = Huffman();
  const uint8_t* y_plane = frame.data.data();
  const uint8_t* u_plane = y_plane + g.y_size();
  const uint8_t* v_plane = u_plane + g.c_size();
  const int cw = g.chroma_width();
  const int ch = g.chroma_height();

  EntropyWriter writer(out);
  int prev_y = 0, prev_u = 0, prev_v = 0;
  float block[64], dct[64];
  int coef[64];
  const int mcus_x = (g.width + 15) / 16;
  const int mcus_y = (g.height + 15) / 16;
  for (int my = 0; my < mcus_y; ++my) {
    for (int mx = 0; mx < mcus_x; ++mx) {
      for (int b = 0; b < 4; ++b) {
        FetchBlock(y_plane, g.y_stride, g.width, g.height, mx * 16 + (b & 1) * 8, my * 16 + (b >> 1) * 8, block);
        ForwardDct(block, dct);
        Quantize(dct, luma_recip, coef);
        EncodeBlock(writer, coef, prev_y, huffman.dc_luma, huffman.ac_luma);
      }
      FetchBlock(u_plane, g.c_stride, cw, ch, mx * 8, my * 8, block);
      ForwardDct(block, dct);
      Quantize(dct, chroma_recip, coef);
      EncodeBlock(writer, coef, prev_u, huffman.dc_chroma, huffman.ac_chroma);

      FetchBlock(v_plane, g.c_stride, cw, ch, mx * 8, my * 8, block);
      ForwardDct(block, dct);
      Quantize(dct, chroma_recip, coef);
      EncodeBlock(writer, coef, prev_v, huffman.dc_chroma, huffman.ac_chroma);
    }
  }
  writer.Flush();
  PutMarker(out, 0xD9);  // EOI
  return image;
}

}  // namespace videoservice
