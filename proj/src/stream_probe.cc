#include "videoservice/stream_probe.h"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <string_view>

#include "videoservice/errors.h"
#include "videoservice/mpjpeg.h"

namespace videoservice::probe {
namespace {

constexpr size_t kMaxKindsRecorded = 64;
constexpr size_t kMaxHeadBytes = 8192;
constexpr size_t kMaxPartHeaderBytes = 4096;
constexpr size_t kMaxContentLength = 64u << 20;

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// MSB-first reader over an RBSP.
class BitReader {
 public:
  explicit BitReader(std::span<const uint8_t> data) : data_(data) {}

  uint32_t Bits(int count) {
    uint32_t value = 0;
    for (int i = 0; i < count; ++i) {
      if (bit_ >= data_.size() * 8) throw Error("truncated RBSP");
      value = (value << 1) | ((data_[bit_ >> 3] >> (7 - (bit_ & 7))) & 1u);
      ++bit_;
    }
    return value;
  }
  bool Flag() { return Bits(1) != 0; }
  uint32_t Ue() {
    int leading = 0;
    while (Bits(1) == 0) {
      if (++leading > 31) throw Error("invalid Exp-Golomb code");
    }
    return leading == 0 ? 0 : (1u << leading) - 1 + Bits(leading);
  }
  int32_t Se() {
    const uint32_t k = Ue();
    return (k & 1) ? static_cast<int32_t>((k + 1) / 2) : -static_cast<int32_t>(k / 2);
  }
  void AlignToByte() { bit_ = (bit_ + 7) & ~size_t{7}; }
  std::span<const uint8_t> Bytes(size_t count) {
    if (bit_ % 8 != 0) throw Error("byte read at unaligned position");
    const size_t start = bit_ / 8;
    if (start + count > data_.size()) throw Error("truncated RBSP");
    bit_ += count * 8;
    return data_.subspan(start, count);
  }

 private:
  std::span<const uint8_t> data_;
  size_t bit_ = 0;
};

}  // namespace

nlohmann::json ProbeReport::ToJson() const {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : framing_errors) errors.push_back({{"offset", e.offset}, {"description", e.description}});
  nlohmann::json report = {{"stream_kind", ToString(kind)},
                           {"units_received", units_received},
                           {"frames_received", frames_received},
                           {"bytes_received", bytes_received},
                           {"bandwidth_bps", bandwidth_bps},
                           {"framing_errors", errors}};
  if (kind == StreamKind::kH264)
    report["first_unit_kinds"] = first_nal_types;
  else
    report["first_unit_kinds"] = first_part_types;
  return report;
}

// ---------------------------------------------------------------------------
// JPEG marker grammar

std::optional<FramingError> ValidateJpeg(std::span<const uint8_t> jpeg) {
  const size_t n = jpeg.size();
  if (n < 1 || jpeg[0] != 0xFF) return FramingError{0, "missing SOI marker"};
  if (n < 2 || jpeg[1] != 0xD8) return FramingError{1, "missing SOI marker"};

  size_t i = 2;
  size_t scan_start = 0;
  for (;;) {
    if (i >= n) return FramingError{n, "truncated before start of scan"};
    if (jpeg[i] != 0xFF) return FramingError{i, "expected marker"};
    while (i < n && jpeg[i] == 0xFF) ++i;
    if (i >= n) return FramingError{n, "truncated marker"};
    const uint8_t marker = jpeg[i];
    if (marker == 0x00 || marker == 0xD8 || marker == 0xD9 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01)
      return FramingError{i, "unexpected marker before start of scan"};
    if (i + 2 >= n) return FramingError{n, "truncated segment length"};
    const size_t length = (static_cast<size_t>(jpeg[i + 1]) << 8) | jpeg[i + 2];
    if (length < 2) return FramingError{i + 1, "segment length below 2"};
    if (i + 1 + length > n) return FramingError{i + 1, "segment length exceeds data"};
    i += 1 + length;
    if (marker == 0xDA) {
      scan_start = i;
      break;
    }
  }

  for (size_t j = scan_start; j < n; ++j) {
    if (jpeg[j] != 0xFF) continue;
    if (j + 1 >= n) break;
    const uint8_t next = jpeg[j + 1];
    if (next == 0x00 || (next >= 0xD0 && next <= 0xD7)) {
      ++j;
      continue;
    }
    if (next == 0xD9) {
      if (j + 2 == n) return std::nullopt;
      return FramingError{j + 2, "data after EOI"};
    }
    return FramingError{j + 1, "invalid marker inside entropy-coded data"};
  }
  const size_t at = (n >= 2 && jpeg[n - 1] == 0xD9) ? n - 2 : n - 1;
  return FramingError{std::max(at, scan_start), "missing EOI marker"};
}

std::vector<uint8_t> JpegMarkers(std::span<const uint8_t> jpeg) {
  std::vector<uint8_t> markers;
  size_t i = 0;
  const size_t n = jpeg.size();
  bool in_scan = false;
  while (i + 1 < n) {
    if (jpeg[i] != 0xFF) {
      ++i;
      continue;
    }
    const uint8_t marker = jpeg[i + 1];
    if (marker == 0xFF) {
      ++i;
      continue;
    }
    if (in_scan && (marker == 0x00 || (marker >= 0xD0 && marker <= 0xD7))) {
      i += 2;
      continue;
    }
    markers.push_back(marker);
    if (marker == 0xD8 || marker == 0xD9 || (marker >= 0xD0 && marker <= 0xD7)) {
      i += 2;
      continue;
    }
    if (i + 3 >= n) break;
    const size_t length = (static_cast<size_t>(jpeg[i + 2]) << 8) | jpeg[i + 3];
    i += 2 + length;
    in_scan = marker == 0xDA;
  }
  return markers;
}

// ---------------------------------------------------------------------------
// MPJPEG

struct MpjpegParser::State {
  enum class Phase { kPreamble, kDelimiter, kHeaders, kPayload, kTrailer, kResync, kDone };

  PartCallback on_part;
  std::vector<uint8_t> buf;
  size_t pos = 0;
  size_t base = 0;  // stream offset of buf[0]
  Phase phase = Phase::kPreamble;
  std::string boundary = "frame";
  std::string delimiter = "--frame\r\n";
  std::optional<size_t> content_length;
  std::string content_type;
  ProbeReport report;

  size_t Abs(size_t i) const { return base + i; }
  size_t Available() const { return buf.size() - pos; }

  void Fail(size_t offset, std::string description) {
    report.framing_errors.push_back({offset, std::move(description)});
  }

  void SetBoundary(std::string b) {
    boundary = std::move(b);
    delimiter = "--" + boundary + "\r\n";
  }

  std::optional<size_t> Find(std::string_view needle, size_t from) const {
    if (from >= buf.size()) return std::nullopt;
    auto it = std::search(buf.begin() + static_cast<std::ptrdiff_t>(from), buf.end(), needle.begin(), needle.end());
    if (it == buf.end()) return std::nullopt;
    return static_cast<size_t>(it - buf.begin());
  }

  std::string_view Text(size_t from, size_t to) const {
    return {reinterpret_cast<const char*>(buf.data()) + from, to - from};
  }

  void Compact() {
    if (pos > (1u << 20) && pos > buf.size() / 2) {
      buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(pos));
      base += pos;
      pos = 0;
    }
  }

  // Returns false when more input is needed.
  bool Step() {
    switch (phase) {
      case Phase::kPreamble:
        return StepPreamble();
      case Phase::kDelimiter:
        return StepDelimiter();
      case Phase::kHeaders:
        return StepHeaders();
      case Phase::kPayload:
        return StepPayload();
      case Phase::kTrailer:
        return StepTrailer();
      case Phase::kResync:
        return StepResync();
      case Phase::kDone:
        pos = buf.size();
        return false;
    }
    return false;
  }

  bool StepPreamble() {
    static constexpr std::string_view kStatusPrefix = "HTTP/1.";
    const size_t check = std::min(Available(), kStatusPrefix.size());
    for (size_t i = 0; i < check; ++i) {
      if (buf[pos + i] != static_cast<uint8_t>(kStatusPrefix[i])) {
        Fail(Abs(pos + i), "missing HTTP response preamble");
        // A bare multipart body: take the boundary from its first line.
        if (Available() >= 2 && buf[pos] == '-' && buf[pos + 1] == '-') {
          if (auto eol = Find("\r\n", pos)) SetBoundary(std::string(Text(pos + 2, *eol)));
          phase = Phase::kDelimiter;
        } else {
          phase = Phase::kResync;
        }
        return true;
      }
    }
    auto end = Find("\r\n\r\n", pos);
    if (!end) {
      if (Available() > kMaxHeadBytes) {
        Fail(Abs(pos + kMaxHeadBytes), "response preamble too long");
        phase = Phase::kResync;
        return true;
      }
      return false;
    }
    const size_t head_end = *end;
    auto first_eol = *Find("\r\n", pos);
    // Status line: HTTP/1.x 200 ...
    const std::string_view status = Text(pos, first_eol);
    if (status.size() < 12 || status.substr(8, 4) != " 200") {
      Fail(Abs(pos + std::min<size_t>(9, status.size())), "response status is not 200");
    }
    bool found_type = false;
    size_t line = first_eol + 2;
    while (line < head_end) {
      const size_t eol = *Find("\r\n", line);
      const std::string_view text = Text(line, eol);
      const auto colon = text.find(':');
      if (colon != std::string_view::npos && EqualsIgnoreCase(Trim(text.substr(0, colon)), "Content-Type")) {
        found_type = true;
        const std::string_view value = Trim(text.substr(colon + 1));
        const size_t value_at = line + (value.data() - text.data());
        if (value.substr(0, std::min(value.size(), size_t{25})) != kMpjpegContentType) {
          Fail(Abs(value_at), "Content-Type is not multipart/x-mixed-replace");
        }
        const auto b = value.find("boundary=");
        if (b == std::string_view::npos) {
          Fail(Abs(value_at), "Content-Type has no boundary parameter");
        } else {
          std::string_view token = value.substr(b + 9);
          token = token.substr(0, token.find(';'));
          token = Trim(token);
          if (token.size() >= 2 && token.front() == '"' && token.back() == '"') token = token.substr(1, token.size() - 2);
          SetBoundary(std::string(token));
        }
      }
      line = eol + 2;
    }
    if (!found_type) Fail(Abs(head_end), "response has no Content-Type header");
    pos = head_end + 4;
    phase = Phase::kDelimiter;
    return true;
  }

  bool StepDelimiter() {
    const size_t check = std::min(Available(), delimiter.size());
    for (size_t i = 0; i < check; ++i) {
      if (buf[pos + i] == static_cast<uint8_t>(delimiter[i])) continue;
      // "--boundary--" closes the multipart body.
      if (i == delimiter.size() - 2 && buf[pos + i] == '-') {
        phase = Phase::kDone;
        return true;
      }
      Fail(Abs(pos + i), "expected delimiter line '--" + boundary + "'");
      ++pos;
      phase = Phase::kResync;
      return true;
    }
    if (check < delimiter.size()) return false;
    pos += delimiter.size();
    content_length.reset();
    content_type.clear();
    phase = Phase::kHeaders;
    return true;
  }

  bool StepHeaders() {
    for (;;) {
      auto eol = Find("\r\n", pos);
      if (!eol) {
        if (Available() > kMaxPartHeaderBytes) {
          Fail(Abs(pos), "part header line too long");
          phase = Phase::kResync;
          return true;
        }
        return false;
      }
      if (*eol == pos) {  // blank line ends the part header
        if (!content_length) {
          Fail(Abs(pos), "part has no Content-Length");
          phase = Phase::kResync;
          return true;
        }
        pos += 2;
        phase = Phase::kPayload;
        if (report.first_part_types.size() < kMaxKindsRecorded) report.first_part_types.push_back(content_type);
        return true;
      }
      const std::string_view text = Text(pos, *eol);
      const auto colon = text.find(':');
      if (colon == std::string_view::npos) {
        Fail(Abs(pos), "malformed part header line");
        phase = Phase::kResync;
        return true;
      }
      const std::string_view name = Trim(text.substr(0, colon));
      if (EqualsIgnoreCase(name, "Content-Length")) {
        size_t at = colon + 1;
        while (at < text.size() && text[at] == ' ') ++at;
        if (at == text.size()) {
          Fail(Abs(pos + at), "empty Content-Length");
          phase = Phase::kResync;
          return true;
        }
        size_t value = 0;
        for (size_t k = at; k < text.size(); ++k) {
          const char c = text[k];
          if (c < '0' || c > '9') {
            Fail(Abs(pos + k), "non-digit in Content-Length");
            phase = Phase::kResync;
            return true;
          }
          value = value * 10 + static_cast<size_t>(c - '0');
          if (value > kMaxContentLength) {
            Fail(Abs(pos + k), "Content-Length too large");
            phase = Phase::kResync;
            return true;
          }
        }
        content_length = value;
      } else if (EqualsIgnoreCase(name, "Content-Type")) {
        content_type = std::string(Trim(text.substr(colon + 1)));
      }
      pos = *eol + 2;
    }
  }

  bool StepPayload() {
    const size_t n = *content_length;
    if (Available() < n) return false;
    JpegPart part{Abs(pos), std::vector<uint8_t>(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                                                 buf.begin() + static_cast<std::ptrdiff_t>(pos + n))};
    if (auto error = ValidateJpeg(part.bytes)) Fail(part.offset + error->offset, "JPEG payload: " + error->description);
    pos += n;
    ++report.units_received;
    ++report.frames_received;
    if (on_part) on_part(std::move(part));
    phase = Phase::kTrailer;
    return true;
  }

  bool StepTrailer() {
    if (Available() < 2) {
      if (Available() == 1 && buf[pos] != '\r') {
        Fail(Abs(pos), "missing CRLF after part payload");
        phase = Phase::kResync;
        return true;
      }
      return false;
    }
    if (buf[pos] != '\r' || buf[pos + 1] != '\n') {
      Fail(Abs(buf[pos] != '\r' ? pos : pos + 1), "missing CRLF after part payload");
      phase = Phase::kResync;
      return true;
    }
    pos += 2;
    phase = Phase::kDelimiter;
    return true;
  }

  bool StepResync() {
    if (auto at = Find(delimiter, pos)) {
      pos = *at;
      phase = Phase::kDelimiter;
      return true;
    }
    if (buf.size() >= delimiter.size()) pos = std::max(pos, buf.size() - (delimiter.size() - 1));
    return false;
  }

  void Run() {
    while (Step()) {
    }
    Compact();
  }
};

MpjpegParser::MpjpegParser(PartCallback on_part) : state_(std::make_unique<State>()) {
  state_->on_part = std::move(on_part);
  state_->report.kind = StreamKind::kMpjpeg;
}

MpjpegParser::~MpjpegParser() = default;

void MpjpegParser::Feed(std::span<const uint8_t> bytes) {
  state_->report.bytes_received += bytes.size();
  state_->buf.insert(state_->buf.end(), bytes.begin(), bytes.end());
  state_->Run();
}

void MpjpegParser::Finish() {
  State& s = *state_;
  s.Run();
  using Phase = State::Phase;
  const size_t end = s.Abs(s.buf.size());
  switch (s.phase) {
    case Phase::kPreamble:
      s.Fail(end, s.buf.empty() ? "empty stream" : "truncated response preamble");
      break;
    case Phase::kDelimiter:
      if (s.Available() > 0) s.Fail(end, "truncated delimiter line");
      break;
    case Phase::kHeaders:
    case Phase::kPayload:
    case Phase::kTrailer:
      s.Fail(end, "truncated part");
      break;
    case Phase::kResync:
    case Phase::kDone:
      break;
  }
  s.phase = Phase::kDone;
}

const std::string& MpjpegParser::boundary() const { return state_->boundary; }

const ProbeReport& MpjpegParser::report() const { return state_->report; }

MpjpegParseResult ParseMpjpeg(std::span<const uint8_t> stream) {
  MpjpegParseResult result;
  MpjpegParser parser([&](JpegPart&& part) { result.payloads.push_back(std::move(part.bytes)); });
  parser.Feed(stream);
  parser.Finish();
  result.report = parser.report();
  return result;
}

// ---------------------------------------------------------------------------
// Annex-B

struct AnnexBParser::State {
  NalCallback on_nal;
  ProbeReport report;
  size_t offset = 0;  // stream offset of the next input byte
  size_t zeros = 0;
  size_t zeros_start = 0;
  bool in_nal = false;
  bool after_emulation_byte = false;
  bool garbage_reported = false;
  size_t nal_offset = 0;
  std::vector<uint8_t> nal;

  void Fail(size_t at, std::string description) { report.framing_errors.push_back({at, std::move(description)}); }

  void EndNal() {
    if (!in_nal) return;
    in_nal = false;
    if (nal.empty()) {
      Fail(nal_offset, "empty NAL unit");
      return;
    }
    const uint8_t header = nal[0];
    if (header & 0x80) Fail(nal_offset, "forbidden_zero_bit set");
    ParsedNal parsed;
    parsed.offset = nal_offset;
    parsed.nal.ref_idc = static_cast<uint8_t>((header >> 5) & 0x3);
    parsed.nal.type = static_cast<uint8_t>(header & 0x1F);
    parsed.nal.rbsp.assign(nal.begin() + 1, nal.end());
    ++report.units_received;
    if (parsed.nal.type == kNalTypeIdr || parsed.nal.type == kNalTypeSlice) ++report.frames_received;
    if (report.first_nal_types.size() < kMaxKindsRecorded) report.first_nal_types.push_back(parsed.nal.type);
    nal.clear();
    if (on_nal) on_nal(std::move(parsed));
  }

  void Feed(std::span<const uint8_t> bytes) {
    size_t i = 0;
    while (i < bytes.size()) {
      // Bulk-copy runs without zero bytes.
      if (in_nal && zeros == 0 && !after_emulation_byte) {
        const void* hit = std::memchr(bytes.data() + i, 0, bytes.size() - i);
        const size_t stop = hit ? static_cast<size_t>(static_cast<const uint8_t*>(hit) - bytes.data()) : bytes.size();
        if (stop > i) {
          nal.insert(nal.end(), bytes.begin() + static_cast<std::ptrdiff_t>(i),
                     bytes.begin() + static_cast<std::ptrdiff_t>(stop));
          offset += stop - i;
          i = stop;
          continue;
        }
      }
      Byte(bytes[i]);
      ++offset;
      ++i;
    }
  }

  void Byte(uint8_t b) {
    const size_t at = offset;
    if (after_emulation_byte) {
      after_emulation_byte = false;
      if (b > 0x03) Fail(at, "byte after emulation prevention exceeds 0x03");
    }
    if (b == 0) {
      if (zeros == 0) zeros_start = at;
      ++zeros;
      return;
    }
    if (zeros >= 2 && b == 0x01) {
      EndNal();
      zeros = 0;
      in_nal = true;
      nal_offset = at + 1;
      return;
    }
    if (!in_nal) {
      if (!garbage_reported) {
        Fail(at, "data before first start code");
        garbage_reported = true;
      }
      zeros = 0;
      return;
    }
    if (zeros == 2 && b == 0x03) {
      nal.insert(nal.end(), 2, 0x00);
      zeros = 0;
      after_emulation_byte = true;
      return;
    }
    if (zeros >= 3)
      Fail(zeros_start + 2, "start code emulation (00 00 00) inside NAL unit");
    else if (zeros == 2 && b == 0x02)
      Fail(at, "start code emulation (00 00 02) inside NAL unit");
    nal.insert(nal.end(), zeros, 0x00);
    zeros = 0;
    nal.push_back(b);
  }

  void Finish() {
    // Trailing zero bytes belong to no NAL unit.
    zeros = 0;
    EndNal();
  }
};

AnnexBParser::AnnexBParser(NalCallback on_nal) : state_(std::make_unique<State>()) {
  state_->on_nal = std::move(on_nal);
  state_->report.kind = StreamKind::kH264;
}

AnnexBParser::~AnnexBParser() = default;

void AnnexBParser::Feed(std::span<const uint8_t> bytes) {
  state_->report.bytes_received += bytes.size();
  state_->Feed(bytes);
}

void AnnexBParser::Finish() { state_->Finish(); }

const ProbeReport& AnnexBParser::report() const { return state_->report; }

AnnexBParseResult ParseAnnexB(std::span<const uint8_t> stream) {
  AnnexBParseResult result;
  AnnexBParser parser([&](ParsedNal&& nal) { result.nals.push_back(std::move(nal)); });
  parser.Feed(stream);
  parser.Finish();
  result.report = parser.report();
  return result;
}

std::vector<size_t> FindStartCodeEmulations(std::span<const uint8_t> s) {
  std::vector<size_t> hits;
  for (size_t i = 0; i + 2 < s.size(); ++i) {
    if (s[i] != 0 || s[i + 1] != 0) continue;
    const uint8_t third = s[i + 2];
    if (third == 0x01) continue;
    if (third == 0x00) {
      if (i + 3 < s.size() && s[i + 3] == 0x01) {
        i += 3;  // 4-byte start code
        continue;
      }
      hits.push_back(i);
    } else if (third == 0x02) {
      hits.push_back(i);
    }
  }
  return hits;
}

// ---------------------------------------------------------------------------
// Parameter sets and I_PCM reconstruction

SpsInfo ParseSps(std::span<const uint8_t> rbsp) {
  BitReader r(rbsp);
  SpsInfo sps;
  sps.profile_idc = static_cast<int>(r.Bits(8));
  r.Bits(8);  // constraint flags + reserved
  sps.level_idc = static_cast<int>(r.Bits(8));
  sps.sps_id = static_cast<int>(r.Ue());
  switch (sps.profile_idc) {
    case 100: case 110: case 122: case 244: case 44: case 83: case 86: case 118: case 128: case 138:
    case 139: case 134: case 135:
      throw UnsupportedError("SPS profile " + std::to_string(sps.profile_idc) + " not handled by the probe");
    default:
      break;
  }
  sps.log2_max_frame_num = static_cast<int>(r.Ue()) + 4;
  sps.poc_type = static_cast<int>(r.Ue());
  if (sps.poc_type == 0) {
    sps.log2_max_poc_lsb = static_cast<int>(r.Ue()) + 4;
  } else if (sps.poc_type == 1) {
    throw UnsupportedError("pic_order_cnt_type 1 not handled by the probe");
  }
  sps.max_num_ref_frames = static_cast<int>(r.Ue());
  r.Flag();  // gaps_in_frame_num_value_allowed_flag
  sps.mb_width = static_cast<int>(r.Ue()) + 1;
  sps.mb_height = static_cast<int>(r.Ue()) + 1;
  if (!r.Flag()) throw UnsupportedError("field coding not handled by the probe");
  r.Flag();  // direct_8x8_inference_flag
  if (r.Flag()) {
    sps.crop_left = static_cast<int>(r.Ue());
    sps.crop_right = static_cast<int>(r.Ue());
    sps.crop_top = static_cast<int>(r.Ue());
    sps.crop_bottom = static_cast<int>(r.Ue());
  }
  return sps;
}

PpsInfo ParsePps(std::span<const uint8_t> rbsp) {
  BitReader r(rbsp);
  PpsInfo pps;
  pps.pps_id = static_cast<int>(r.Ue());
  pps.sps_id = static_cast<int>(r.Ue());
  if (r.Flag()) throw UnsupportedError("CABAC not handled by the probe");
  pps.bottom_field_pic_order_present = r.Flag();
  if (r.Ue() != 0) throw UnsupportedError("slice groups not handled by the probe");
  r.Ue();
  r.Ue();
  r.Flag();
  r.Bits(2);
  r.Se();
  r.Se();
  r.Se();
  pps.deblocking_control_present = r.Flag();
  r.Flag();
  pps.redundant_pic_cnt_present = r.Flag();
  return pps;
}

DecodedPicture DecodeIpcm(const SpsInfo& sps, const PpsInfo& pps, const NalUnit& slice) {
  if (slice.type != kNalTypeIdr)
    throw UnsupportedError("NAL type " + std::to_string(slice.type) + " is not an IDR slice");
  BitReader r(slice.rbsp);
  if (r.Ue() != 0) throw UnsupportedError("multi-slice pictures not handled by the probe");
  const uint32_t slice_type = r.Ue();
  if (slice_type % 5 != 2) throw UnsupportedError("slice type " + std::to_string(slice_type) + " is not I");
  r.Ue();                         // pic_parameter_set_id
  r.Bits(sps.log2_max_frame_num);  // frame_num
  DecodedPicture picture;
  picture.idr_pic_id = r.Ue();
  if (sps.poc_type == 0) {
    r.Bits(sps.log2_max_poc_lsb);
    if (pps.bottom_field_pic_order_present) r.Se();
  }
  if (pps.redundant_pic_cnt_present) r.Ue();
  if (slice.ref_idc != 0) {
    r.Flag();  // no_output_of_prior_pics_flag
    r.Flag();  // long_term_reference_flag
  }
  r.Se();  // slice_qp_delta
  if (pps.deblocking_control_present) {
    if (r.Ue() != 1) {
      r.Se();
      r.Se();
    }
  }

  const int padded_w = sps.mb_width * 16;
  const int padded_h = sps.mb_height * 16;
  Yuv420Image padded(FrameGeometry::Packed(padded_w, padded_h));
  const int total = sps.mb_width * sps.mb_height;
  for (int mb = 0; mb < total; ++mb) {
    const uint32_t mb_type = r.Ue();
    if (mb_type != kMbTypeIpcm)
      throw UnsupportedError("macroblock " + std::to_string(mb) + " has mb_type " + std::to_string(mb_type) +
                             ", only I_PCM is handled");
    r.AlignToByte();
    const auto samples = r.Bytes(384);
    const int mx = mb % sps.mb_width;
    const int my = mb / sps.mb_width;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) padded.Y(mx * 16 + x, my * 16 + y) = samples[y * 16 + x];
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        padded.U(mx * 8 + x, my * 8 + y) = samples[256 + y * 8 + x];
        padded.V(mx * 8 + x, my * 8 + y) = samples[320 + y * 8 + x];
      }
  }

  const int width = sps.width();
  const int height = sps.height();
  const int left = 2 * sps.crop_left;
  const int top = 2 * sps.crop_top;
  picture.image = Yuv420Image(FrameGeometry::Packed(width, height));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) picture.image.Y(x, y) = padded.Y(left + x, top + y);
  for (int y = 0; y < height / 2; ++y)
    for (int x = 0; x < width / 2; ++x) {
      picture.image.U(x, y) = padded.U(left / 2 + x, top / 2 + y);
      picture.image.V(x, y) = padded.V(left / 2 + x, top / 2 + y);
    }
  return picture;
}

DecodedPicture DecodeIpcm(const ParameterSets& params, const NalUnit& slice) {
  return DecodeIpcm(ParseSps(params.sps.rbsp), ParsePps(params.pps.rbsp), slice);
}

}  // namespace videoservice::probe
