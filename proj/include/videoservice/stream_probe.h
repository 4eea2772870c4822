#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "videoservice/frame.h"
#include "videoservice/h264_encoder.h"
#include "videoservice/stream_server.h"

namespace videoservice::probe {

struct FramingError {
  size_t offset = 0;
  std::string description;
};

struct ProbeReport {
  StreamKind kind = StreamKind::kMpjpeg;
  uint64_t units_received = 0;
  uint64_t bytes_received = 0;
  // H.264: slice NAL units (pictures); MPJPEG: same as units_received.
  uint64_t frames_received = 0;
  double bandwidth_bps = 0;
  std::vector<FramingError> framing_errors;
  // First few NAL types (H.264) or part content types (MPJPEG).
  std::vector<int> first_nal_types;
  std::vector<std::string> first_part_types;

  nlohmann::json ToJson() const;
};

// ---------------------------------------------------------------------------
// MPJPEG

struct JpegPart {
  size_t offset = 0;  // stream offset of the first payload byte
  std::vector<uint8_t> bytes;
};

// Incremental multipart/x-mixed-replace parser. Payloads are delimited by
// Content-Length only; the boundary is matched only where a delimiter line
// must start, so payloads may contain the boundary text. After a framing
// error the parser resynchronizes on the next delimiter line.
class MpjpegParser {
 public:
  using PartCallback = std::function<void(JpegPart&&)>;

  explicit MpjpegParser(PartCallback on_part);
  ~MpjpegParser();

  void Feed(std::span<const uint8_t> bytes);
  // Records a truncation error when the stream stops inside a part.
  void Finish();

  const std::string& boundary() const;
  const ProbeReport& report() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct MpjpegParseResult {
  std::vector<std::vector<uint8_t>> payloads;
  ProbeReport report;
};

MpjpegParseResult ParseMpjpeg(std::span<const uint8_t> stream);

// Checks JFIF marker grammar: SOI, well-formed segments up to SOS, entropy
// data in which every 0xFF is followed by 0x00 or RSTn, then EOI as the last
// two bytes. Returns the first violation; offsets are relative to `jpeg`.
std::optional<FramingError> ValidateJpeg(std::span<const uint8_t> jpeg);

// Marker codes in order of appearance (entropy data skipped), e.g.
// D8 E0 DB DB C0 C4 C4 C4 C4 DA D9.
std::vector<uint8_t> JpegMarkers(std::span<const uint8_t> jpeg);

// ---------------------------------------------------------------------------
// H.264 Annex-B

struct ParsedNal {
  size_t offset = 0;  // stream offset of the NAL header byte
  NalUnit nal;        // payload already unescaped
};

// Incremental Annex-B splitter. Accepts 3- and 4-byte start codes, removes
// emulation prevention bytes, and records as framing errors: leading
// garbage, forbidden_zero_bit, and start-code emulation inside a NAL unit.
class AnnexBParser {
 public:
  using NalCallback = std::function<void(ParsedNal&&)>;

  explicit AnnexBParser(NalCallback on_nal);
  ~AnnexBParser();

  void Feed(std::span<const uint8_t> bytes);
  void Finish();

  const ProbeReport& report() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct AnnexBParseResult {
  std::vector<ParsedNal> nals;
  ProbeReport report;
};

AnnexBParseResult ParseAnnexB(std::span<const uint8_t> stream);

// Offsets of every 00 00 0x (x <= 2) in `stream` that is not part of a
// start code: a conforming stream yields an empty list.
std::vector<size_t> FindStartCodeEmulations(std::span<const uint8_t> stream);

struct SpsInfo {
  int profile_idc = 0;
  int level_idc = 0;
  int sps_id = 0;
  int log2_max_frame_num = 4;
  int poc_type = 0;
  int log2_max_poc_lsb = 4;
  int max_num_ref_frames = 0;
  int mb_width = 0;
  int mb_height = 0;
  int crop_left = 0;
  int crop_right = 0;
  int crop_top = 0;
  int crop_bottom = 0;

  int width() const { return mb_width * 16 - 2 * (crop_left + crop_right); }
  int height() const { return mb_height * 16 - 2 * (crop_top + crop_bottom); }
};

struct PpsInfo {
  int pps_id = 0;
  int sps_id = 0;
  bool bottom_field_pic_order_present = false;
  bool deblocking_control_present = false;
  bool redundant_pic_cnt_present = false;
};

// Only the profiles without chroma_format_idc (baseline, main, extended)
// and frame-only coding are handled; anything else is UnsupportedError.
SpsInfo ParseSps(std::span<const uint8_t> rbsp);
PpsInfo ParsePps(std::span<const uint8_t> rbsp);

struct DecodedPicture {
  Yuv420Image image;
  uint32_t idr_pic_id = 0;
};

// Reconstructs an I_PCM-only IDR slice and applies the SPS crop. Any other
// macroblock type throws UnsupportedError.
DecodedPicture DecodeIpcm(const SpsInfo& sps, const PpsInfo& pps, const NalUnit& slice);
DecodedPicture DecodeIpcm(const ParameterSets& params, const NalUnit& slice);

}  // namespace videoservice::probe
