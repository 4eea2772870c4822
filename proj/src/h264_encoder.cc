#include "videoservice/h264_encoder.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iterator>
#include <string>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

constexpr int kMaxDimension = 4096;

struct LevelLimit {
  int level_idc;
  int max_frame_mbs;
};

// MaxFS per level (Table A-1).
constexpr LevelLimit kLevels[] = {
    {10, 99},    {11, 396},   {20, 396},   {21, 792},   {22, 1620},  {30, 1620},  {31, 3600},
    {32, 5120},  {40, 8192},  {41, 8192},  {42, 8704},  {50, 22080}, {51, 36864}, {52, 36864},
    {60, 139264}};

int ChooseLevel(int mb_width, int mb_height) {
  const int frame_mbs = mb_width * mb_height;
  for (const auto& level : kLevels) {
    // Neither dimension may exceed sqrt(8 * MaxFS) macroblocks.
    const int max_side = static_cast<int>(std::sqrt(8.0 * level.max_frame_mbs));
    if (frame_mbs <= level.max_frame_mbs && mb_width <= max_side && mb_height <= max_side)
      return level.level_idc;
  }
  return kLevels[std::size(kLevels) - 1].level_idc;
}

NalUnit BuildSps(const ParameterSets& p) {
  RbspWriter w;
  w.PutBits(66, 8);    // profile_idc: baseline
  w.PutBits(0xC0, 8);  // constraint_set0_flag, constraint_set1_flag (constrained baseline)
  w.PutBits(static_cast<uint32_t>(p.level_idc), 8);
  w.PutUe(0);  // seq_parameter_set_id
  w.PutUe(static_cast<uint32_t>(p.log2_max_frame_num - 4));
  w.PutUe(2);  // pic_order_cnt_type: output order = decoding order
  w.PutUe(1);  // max_num_ref_frames
  w.PutBit(false);  // gaps_in_frame_num_value_allowed_flag
  w.PutUe(static_cast<uint32_t>(p.mb_width - 1));
  w.PutUe(static_cast<uint32_t>(p.mb_height - 1));
  w.PutBit(true);  // frame_mbs_only_flag
  w.PutBit(true);  // direct_8x8_inference_flag
  const bool cropping = p.crop_right != 0 || p.crop_bottom != 0;
  w.PutBit(cropping);
  if (cropping) {
    w.PutUe(0);
    w.PutUe(static_cast<uint32_t>(p.crop_right));
    w.PutUe(0);
    w.PutUe(static_cast<uint32_t>(p.crop_bottom));
  }
  w.PutBit(false);  // vui_parameters_present_flag
  w.PutTrailingBits();
  return {3, kNalTypeSps, w.Take()};
}

NalUnit BuildPps() {
  RbspWriter w;
  w.PutUe(0);       // pic_parameter_set_id
  w.PutUe(0);       // seq_parameter_set_id
  w.PutBit(false);  // entropy_coding_mode_flag: CAVLC
  w.PutBit(false);  // bottom_field_pic_order_in_frame_present_flag
  w.PutUe(0);       // num_slice_groups_minus1
  w.PutUe(0);       // num_ref_idx_l0_default_active_minus1
  w.PutUe(0);       // num_ref_idx_l1_default_active_minus1
  w.PutBit(false);  // weighted_pred_flag
  w.PutBits(0, 2);  // weighted_bipred_idc
  w.PutSe(0);       // pic_init_qp_minus26
  w.PutSe(0);       // pic_init_qs_minus26
  w.PutSe(0);       // chroma_qp_index_offset
  w.PutBit(true);   // deblocking_filter_control_present_flag
  w.PutBit(false);  // constrained_intra_pred_flag
  w.PutBit(false);  // redundant_pic_cnt_present_flag
  w.PutTrailingBits();
  return {3, kNalTypePps, w.Take()};
}

}  // namespace

void RbspWriter::PutBits(uint32_t value, int count) {
  for (int i = count - 1; i >= 0; --i) {
    acc_ = (acc_ << 1) | ((value >> i) & 1u);
    if (++filled_ == 8) {
      bytes_.push_back(static_cast<uint8_t>(acc_));
      acc_ = 0;
      filled_ = 0;
    }
  }
}

void RbspWriter::PutUe(uint32_t value) {
  const uint64_t code = static_cast<uint64_t>(value) + 1;
  const int bits = std::bit_width(code);
  PutBits(0, bits - 1);
  // code has `bits` significant bits; emit them MSB first.
  for (int i = bits - 1; i >= 0; --i) PutBit(((code >> i) & 1u) != 0);
}

void RbspWriter::PutSe(int32_t value) {
  const uint32_t mapped = value > 0 ? static_cast<uint32_t>(2 * value - 1) : static_cast<uint32_t>(-2 * static_cast<int64_t>(value));
  PutUe(mapped);
}

void RbspWriter::AlignZero() {
  if (filled_ != 0) PutBits(0, 8 - filled_);
}

void RbspWriter::PutBytes(std::span<const uint8_t> bytes) {
  if (filled_ != 0) throw ContractError("RbspWriter::PutBytes requires byte alignment");
  bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
}

void RbspWriter::PutTrailingBits() {
  PutBit(true);
  AlignZero();
}

std::vector<uint8_t> RbspWriter::Take() {
  if (filled_ != 0) throw ContractError("RbspWriter::Take on an unaligned payload");
  return std::move(bytes_);
}

ParameterSets MakeParameterSets(int width, int height) {
  if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
    throw ConfigError("H.264 frame size must be positive and even, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  if (width > kMaxDimension || height > kMaxDimension)
    throw ConfigError("H.264 frame size limited to 4096x4096, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  ParameterSets p;
  p.width = width;
  p.height = height;
  p.mb_width = (width + 15) / 16;
  p.mb_height = (height + 15) / 16;
  p.crop_right = (p.mb_width * 16 - width) / 2;
  p.crop_bottom = (p.mb_height * 16 - height) / 2;
  p.level_idc = ChooseLevel(p.mb_width, p.mb_height);
  p.sps = BuildSps(p);
  p.pps = BuildPps();
  return p;
}

size_t IpcmChunkBound(int width, int height) {
  const size_t mbs = static_cast<size_t>((width + 15) / 16) * ((height + 15) / 16);
  // 384 samples + up to 3 bytes of mb_type/alignment per macroblock, slice
  // header, worst-case emulation prevention (3 bytes out per 2 in).
  const size_t rbsp = mbs * (384 + 3) + 64;
  return 4 + 1 + rbsp + rbsp / 2 + 1;
}

NalUnit EncodeIpcm(const ParameterSets& params, const Yuv420View& frame, uint32_t frame_index) {
  const FrameGeometry& g = frame.geometry;
  if (g.width != params.width || g.height != params.height)
    throw ContractError("frame " + std::to_string(g.width) + "x" + std::to_string(g.height) +
                        " does not match parameter sets " + std::to_string(params.width) + "x" +
                        std::to_string(params.height));

  RbspWriter w;
  w.bytes().reserve(static_cast<size_t>(params.mb_width) * params.mb_height * (384 + 3) + 64);

  // slice_header()
  w.PutUe(0);  // first_mb_in_slice
  w.PutUe(7);  // slice_type: I, all slices of the picture
  w.PutUe(0);  // pic_parameter_set_id
  w.PutBits(0, params.log2_max_frame_num);  // frame_num (0 for IDR)
  w.PutUe(frame_index & 0xFFFF);            // idr_pic_id
  w.PutBit(false);                          // no_output_of_prior_pics_flag
  w.PutBit(false);                          // long_term_reference_flag
  w.PutSe(0);                               // slice_qp_delta
  w.PutUe(1);                               // disable_deblocking_filter_idc

  const int cw = g.chroma_width();
  const int ch = g.chroma_height();
  const uint8_t* y_plane = frame.data.data();
  const uint8_t* u_plane = y_plane + g.y_size();
  const uint8_t* v_plane = u_plane + g.c_size();
  uint8_t samples[384];

  auto gather = [](const uint8_t* plane, int stride, int width, int height, int x0, int y0, int size,
                   uint8_t* out) {
    for (int y = 0; y < size; ++y) {
      const uint8_t* row = plane + static_cast<size_t>(std::min(y0 + y, height - 1)) * stride;
      if (x0 + size <= width) {
        std::copy_n(row + x0, size, out + y * size);
      } else {
        for (int x = 0; x < size; ++x) out[y * size + x] = row[std::min(x0 + x, width - 1)];
      }
    }
  };

  // slice_data(): every macroblock is mb_type I_PCM followed by its samples.
  for (int my = 0; my < params.mb_height; ++my) {
    for (int mx = 0; mx < params.mb_width; ++mx) {
      w.PutUe(kMbTypeIpcm);
      w.AlignZero();  // pcm_alignment_zero_bit
      gather(y_plane, g.y_stride, g.width, g.height, mx * 16, my * 16, 16, samples);
      gather(u_plane, g.c_stride, cw, ch, mx * 8, my * 8, 8, samples + 256);
      gather(v_plane, g.c_stride, cw, ch, mx * 8, my * 8, 8, samples + 320);
      w.PutBytes(samples);
    }
  }
  w.PutTrailingBits();
  return {3, kNalTypeIdr, w.Take()};
}

}  // namespace videoservice
