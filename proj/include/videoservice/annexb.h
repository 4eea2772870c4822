#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "videoservice/h264_encoder.h"

namespace videoservice {

inline constexpr std::array<uint8_t, 4> kStartCode = {0x00, 0x00, 0x00, 0x01};

// Emulation prevention: inserts 0x03 after every 00 00 that is followed by
// a byte <= 0x03. A trailing 00 00 at the end of the payload also gets 0x03
// so that no start code can form across a NAL boundary.
std::vector<uint8_t> EscapeEbsp(std::span<const uint8_t> rbsp);
size_t EscapedSize(std::span<const uint8_t> rbsp);
// Writes the escaped form into `out` (at least EscapedSize bytes); returns
// the number of bytes written.
size_t EscapeInto(std::span<const uint8_t> rbsp, std::span<uint8_t> out);

// Inverse of EscapeEbsp: drops every 0x03 that follows 00 00.
std::vector<uint8_t> UnescapeEbsp(std::span<const uint8_t> ebsp);

// Start code + header byte + escaped payload.
void AppendNal(std::vector<uint8_t>& out, const NalUnit& nal);
size_t NalChunkSize(const NalUnit& nal);

// SPS then PPS, each behind a start code.
std::vector<uint8_t> AnnexBParameterSets(const ParameterSets& params);

// The slice behind a start code, preceded by SPS and PPS when requested.
std::vector<uint8_t> AnnexBFrame(const ParameterSets& params, const NalUnit& slice,
                                 bool include_parameter_sets);

}  // namespace videoservice
