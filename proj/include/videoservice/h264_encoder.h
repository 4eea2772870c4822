#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "videoservice/frame.h"

namespace videoservice {

inline constexpr uint8_t kNalTypeSlice = 1;
inline constexpr uint8_t kNalTypeIdr = 5;
inline constexpr uint8_t kNalTypeSps = 7;
inline constexpr uint8_t kNalTypePps = 8;

// I_PCM in I slices.
inline constexpr uint32_t kMbTypeIpcm = 25;

struct NalUnit {
  uint8_t ref_idc = 3;
  uint8_t type = 0;
  std::vector<uint8_t> rbsp;

  // forbidden_zero_bit (0) | nal_ref_idc (2 bits) | nal_unit_type (5 bits)
  uint8_t HeaderByte() const { return static_cast<uint8_t>((ref_idc << 5) | (type & 0x1F)); }
};

// MSB-first bit writer producing RBSP payloads.
class RbspWriter {
 public:
  void PutBits(uint32_t value, int count);
  void PutBit(bool bit) { PutBits(bit ? 1 : 0, 1); }
  void PutUe(uint32_t value);
  void PutSe(int32_t value);
  // Zero bits up to the next byte boundary.
  void AlignZero();
  bool byte_aligned() const { return filled_ == 0; }
  // Requires byte alignment.
  void PutBytes(std::span<const uint8_t> bytes);
  // rbsp_stop_one_bit followed by alignment zeros.
  void PutTrailingBits();

  std::vector<uint8_t> Take();
  std::vector<uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
  uint32_t acc_ = 0;
  int filled_ = 0;
};

// SPS/PPS for an intra-only I_PCM stream.
//
// Profile: constrained baseline (profile_idc 66, constraint_set0/1). I_PCM
// streams carry raw samples, so no level's bitrate limit can hold; level_idc
// is chosen as the smallest level whose frame-size limit (MaxFS) fits the
// macroblock grid, which is what decoders use to size their buffers.
struct ParameterSets {
  NalUnit sps;
  NalUnit pps;
  int width = 0;
  int height = 0;
  int mb_width = 0;
  int mb_height = 0;
  // Frame cropping in 4:2:0 crop units (2 luma samples).
  int crop_right = 0;
  int crop_bottom = 0;
  int level_idc = 0;
  int log2_max_frame_num = 4;
};

// Throws ConfigError for odd, non-positive or > 4096 dimensions.
ParameterSets MakeParameterSets(int width, int height);

// One IDR slice with every macroblock coded as I_PCM. Samples outside the
// visible frame (grid padding) replicate the last row/column.
// `frame_index` becomes idr_pic_id (mod 65536). Throws ContractError when
// the frame geometry does not match the parameter sets.
NalUnit EncodeIpcm(const ParameterSets& params, const Yuv420View& frame, uint32_t frame_index);

// Upper bound on the escaped Annex-B size of one I_PCM slice (start code
// included), for sizing output buffers.
size_t IpcmChunkBound(int width, int height);

}  // namespace videoservice
