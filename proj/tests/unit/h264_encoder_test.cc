#include <gtest/gtest.h>

#include <string>

#include "videoservice/annexb.h"
#include "videoservice/errors.h"
#include "videoservice/frame_source.h"
#include "videoservice/h264_encoder.h"
#include "videoservice/stream_probe.h"

namespace videoservice {
namespace {

// Bit-string spelling of the syntax elements, packed at the end.
struct Bits {
  std::string s;
  Bits& u(uint32_t v, int n) {
    for (int i = n - 1; i >= 0; --i) s += ((v >> i) & 1) ? '1' : '0';
    return *this;
  }
  Bits& ue(uint32_t v) {
    std::string b;
    for (uint32_t x = v + 1; x; x >>= 1) b.insert(b.begin(), (x & 1) ? '1' : '0');
    s += std::string(b.size() - 1, '0') + b;
    return *this;
  }
  Bits& se(int32_t v) { return ue(v <= 0 ? static_cast<uint32_t>(-2 * v) : static_cast<uint32_t>(2 * v - 1)); }
  std::vector<uint8_t> Trailing() {
    s += '1';
    while (s.size() % 8) s += '0';
    std::vector<uint8_t> out;
    for (size_t i = 0; i < s.size(); i += 8) out.push_back(static_cast<uint8_t>(std::stoi(s.substr(i, 8), nullptr, 2)));
    return out;
  }
};

std::vector<uint8_t> ExpectedSps(int mb_w, int mb_h, int level, int crop_right, int crop_bottom) {
  Bits b;
  b.u(66, 8).u(0xC0, 8).u(level, 8).ue(0).ue(0).ue(2).ue(1).u(0, 1).ue(mb_w - 1).ue(mb_h - 1).u(1, 1).u(1, 1);
  if (crop_right || crop_bottom)
    b.u(1, 1).ue(0).ue(crop_right).ue(0).ue(crop_bottom);
  else
    b.u(0, 1);
  b.u(0, 1);
  return b.Trailing();
}

TEST(ParameterSetsTest, FullHdGridAndCrop) {
  const ParameterSets p = MakeParameterSets(1920, 1080);
  EXPECT_EQ(p.mb_width, 120);
  EXPECT_EQ(p.mb_height, 68);
  EXPECT_EQ(68 * 16 - 1080, 8);  // 8 luma rows = 4 crop units
  EXPECT_EQ(p.crop_bottom, 4);
  EXPECT_EQ(p.crop_right, 0);
  EXPECT_EQ(p.level_idc, 40);  // 8160 MBs <= MaxFS 8192
  EXPECT_EQ(p.sps.type, kNalTypeSps);
  EXPECT_EQ(p.sps.HeaderByte(), 0x67);
  EXPECT_EQ(p.pps.HeaderByte(), 0x68);
  EXPECT_EQ(p.sps.rbsp, ExpectedSps(120, 68, 40, 0, 4));
  EXPECT_EQ(p.sps.rbsp, (std::vector<uint8_t>{0x42, 0xC0, 0x28, 0xDA, 0x01, 0xE0, 0x08, 0x9F, 0x95}));
  EXPECT_EQ(p.pps.rbsp, (std::vector<uint8_t>{0xCE, 0x3C, 0x80}));
}

TEST(ParameterSetsTest, SmallAndSvga) {
  const ParameterSets tiny = MakeParameterSets(16, 16);
  EXPECT_EQ(tiny.mb_width, 1);
  EXPECT_EQ(tiny.mb_height, 1);
  EXPECT_EQ(tiny.crop_bottom, 0);
  EXPECT_EQ(tiny.sps.rbsp, ExpectedSps(1, 1, 10, 0, 0));

  const ParameterSets svga = MakeParameterSets(800, 600);
  EXPECT_EQ(svga.mb_width, 50);
  EXPECT_EQ(svga.mb_height, 38);
  EXPECT_EQ(svga.crop_bottom, (608 - 600) / 2);
  EXPECT_EQ(svga.sps.rbsp, ExpectedSps(50, 38, svga.level_idc, 0, 4));

  const ParameterSets odd_grid = MakeParameterSets(18, 34);
  EXPECT_EQ(odd_grid.crop_right, (32 - 18) / 2);
  EXPECT_EQ(odd_grid.crop_bottom, (48 - 34) / 2);
}

TEST(ParameterSetsTest, ProbeParsesWhatWeWrite) {
  const ParameterSets p = MakeParameterSets(1920, 1080);
  const probe::SpsInfo sps = probe::ParseSps(p.sps.rbsp);
  EXPECT_EQ(sps.profile_idc, 66);
  EXPECT_EQ(sps.width(), 1920);
  EXPECT_EQ(sps.height(), 1080);
  EXPECT_EQ(sps.poc_type, 2);
  const probe::PpsInfo pps = probe::ParsePps(p.pps.rbsp);
  EXPECT_TRUE(pps.deblocking_control_present);
}

TEST(ParameterSetsTest, RejectsBadDimensions) {
  EXPECT_THROW(MakeParameterSets(15, 16), ConfigError);
  EXPECT_THROW(MakeParameterSets(16, 0), ConfigError);
  EXPECT_THROW(MakeParameterSets(4098, 16), ConfigError);
  EXPECT_NO_THROW(MakeParameterSets(4096, 2160));
}

TEST(EncodeIpcmTest, SingleMacroblockLayout) {
  const ParameterSets p = MakeParameterSets(16, 16);
  const Yuv420Image frame = SynthFrame(0, FrameGeometry::Packed(16, 16), {});
  const NalUnit slice = EncodeIpcm(p, frame.view(), 0);
  EXPECT_EQ(slice.HeaderByte(), 0x65);

  Bits header;
  header.ue(0).ue(7).ue(0).u(0, 4).ue(0).u(0, 1).u(0, 1).se(0).ue(1).ue(25);
  while (header.s.size() % 8) header.s += '0';  // pcm_alignment_zero_bit
  const size_t header_bytes = header.s.size() / 8;
  ASSERT_EQ(slice.rbsp.size(), header_bytes + 384 + 1);
  std::vector<uint8_t> samples(frame.data.begin(), frame.data.end());  // Y 256, U 64, V 64
  EXPECT_TRUE(std::equal(samples.begin(), samples.end(), slice.rbsp.begin() + static_cast<long>(header_bytes)));
  EXPECT_EQ(slice.rbsp.back(), 0x80);  // rbsp_stop_one_bit
}

TEST(EncodeIpcmTest, GeometryMismatchIsContractError) {
  const ParameterSets p = MakeParameterSets(32, 32);
  const Yuv420Image frame = SynthFrame(0, FrameGeometry::Packed(16, 16), {});
  EXPECT_THROW(EncodeIpcm(p, frame.view(), 0), ContractError);
}

TEST(EncodeIpcmTest, RoundTripThroughProbeDecoder) {
  for (auto [w, h] : {std::pair{16, 16}, {48, 32}, {18, 34}, {800, 600}, {1920, 1080}}) {
    const ParameterSets p = MakeParameterSets(w, h);
    const Yuv420Image frame = SynthFrame(7, FrameGeometry::Packed(w, h), {});
    const NalUnit slice = EncodeIpcm(p, frame.view(), 7);
    const probe::DecodedPicture decoded = probe::DecodeIpcm(p, slice);
    EXPECT_EQ(decoded.image.geometry.height, h);
    EXPECT_EQ(decoded.image.data, frame.data) << w << "x" << h;
    EXPECT_EQ(decoded.idr_pic_id, 7u);
  }
}

TEST(EncodeIpcmTest, RandomContentRoundTrip) {
  const FrameGeometry g = FrameGeometry::Packed(40, 24);
  const ParameterSets p = MakeParameterSets(40, 24);
  uint32_t state = 5;
  for (int trial = 0; trial < 20; ++trial) {
    Yuv420Image noise(g);
    // Full byte range, including zeros, to exercise emulation prevention.
    for (auto& b : noise.data) b = static_cast<uint8_t>((state = state * 1664525u + 1013904223u) >> 29);
    const NalUnit slice = EncodeIpcm(p, noise.view(), static_cast<uint32_t>(trial));
    std::vector<uint8_t> chunk;
    AppendNal(chunk, slice);
    const probe::AnnexBParseResult parsed = probe::ParseAnnexB(chunk);
    ASSERT_EQ(parsed.nals.size(), 1u);
    EXPECT_TRUE(parsed.report.framing_errors.empty());
    EXPECT_TRUE(probe::FindStartCodeEmulations(std::span(chunk).subspan(4)).empty());
    EXPECT_EQ(probe::DecodeIpcm(p, parsed.nals[0].nal).image.data, noise.data);
  }
}

TEST(EncodeIpcmTest, TamperedSampleChangesExactlyThatSample) {
  const ParameterSets p = MakeParameterSets(32, 32);
  const Yuv420Image frame = SynthFrame(1, FrameGeometry::Packed(32, 32), {});
  NalUnit slice = EncodeIpcm(p, frame.view(), 1);
  const probe::DecodedPicture clean = probe::DecodeIpcm(p, slice);
  // Flip MB 0's luma sample at (5, 3).
  size_t pos = 0;
  {
    Bits h;
    h.ue(0).ue(7).ue(0).u(0, 4).ue(1).u(0, 1).u(0, 1).se(0).ue(1).ue(25);
    while (h.s.size() % 8) h.s += '0';
    pos = h.s.size() / 8 + 3 * 16 + 5;
  }
  slice.rbsp[pos] ^= 0x01;
  const probe::DecodedPicture tampered = probe::DecodeIpcm(p, slice);
  size_t differences = 0;
  for (size_t i = 0; i < clean.image.data.size(); ++i) differences += clean.image.data[i] != tampered.image.data[i];
  EXPECT_EQ(differences, 1u);
  EXPECT_NE(clean.image.view().Y(5, 3), tampered.image.view().Y(5, 3));
}

TEST(EncodeIpcmTest, IdenticalFramesDifferOnlyInHeader) {
  const ParameterSets p = MakeParameterSets(32, 16);
  const Yuv420Image frame = SynthFrame(0, FrameGeometry::Packed(32, 16), {});
  const NalUnit a = EncodeIpcm(p, frame.view(), 0);
  const NalUnit b = EncodeIpcm(p, frame.view(), 0);
  EXPECT_EQ(a.rbsp, b.rbsp);
  const NalUnit c = EncodeIpcm(p, frame.view(), 1);
  EXPECT_EQ(probe::DecodeIpcm(p, c).image.data, probe::DecodeIpcm(p, a).image.data);
}

TEST(DecodeIpcmTest, NonPcmMacroblockUnsupported) {
  const ParameterSets p = MakeParameterSets(16, 16);
  Bits b;
  b.ue(0).ue(7).ue(0).u(0, 4).ue(0).u(0, 1).u(0, 1).se(0).ue(1).ue(0);  // mb_type I_NxN
  NalUnit slice{3, kNalTypeIdr, b.Trailing()};
  EXPECT_THROW(probe::DecodeIpcm(p, slice), UnsupportedError);
  NalUnit non_idr{3, kNalTypeSlice, slice.rbsp};
  EXPECT_THROW(probe::DecodeIpcm(p, non_idr), UnsupportedError);
}

TEST(IpcmChunkBoundTest, CoversWorstCase) {
  const ParameterSets p = MakeParameterSets(32, 32);
  Yuv420Image zeros(FrameGeometry::Packed(32, 32));  // all-zero samples escape the most
  EXPECT_LE(NalChunkSize(EncodeIpcm(p, zeros.view(), 0)), IpcmChunkBound(32, 32));
}

}  // namespace
}  // namespace videoservice
