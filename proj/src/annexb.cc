#include "videoservice/annexb.h"

#include <algorithm>
#include <cstring>

namespace videoservice {

namespace {

// Calls emit(run) for stretches of payload bytes and escape() where an
// emulation prevention byte goes. Non-zero stretches are skipped with memchr.
template <typename Emit, typename Escape>
void WalkEscapes(std::span<const uint8_t> rbsp, Emit emit, Escape escape) {
  const uint8_t* p = rbsp.data();
  const uint8_t* const end = p + rbsp.size();
  int zeros = 0;
  while (p < end) {
    if (zeros == 0) {
      const void* hit = std::memchr(p, 0, static_cast<size_t>(end - p));
      const uint8_t* stop = hit ? static_cast<const uint8_t*>(hit) : end;
      if (stop > p) {
        emit(p, static_cast<size_t>(stop - p));
        p = stop;
        continue;
      }
    }
    const uint8_t b = *p;
    if (zeros >= 2 && b <= 0x03) {
      escape();
      zeros = 0;
    }
    emit(p, 1);
    zeros = b == 0 ? zeros + 1 : 0;
    ++p;
  }
  if (zeros >= 2) escape();
}

}  // namespace

size_t EscapedSize(std::span<const uint8_t> rbsp) {
  size_t size = 0;
  WalkEscapes(rbsp, [&](const uint8_t*, size_t n) { size += n; }, [&] { ++size; });
  return size;
}

size_t EscapeInto(std::span<const uint8_t> rbsp, std::span<uint8_t> out) {
  size_t n = 0;
  WalkEscapes(
      rbsp,
      [&](const uint8_t* run, size_t count) {
        std::memcpy(out.data() + n, run, count);
        n += count;
      },
      [&] { out[n++] = 0x03; });
  return n;
}

std::vector<uint8_t> EscapeEbsp(std::span<const uint8_t> rbsp) {
  std::vector<uint8_t> out(EscapedSize(rbsp));
  EscapeInto(rbsp, out);
  return out;
}

std::vector<uint8_t> UnescapeEbsp(std::span<const uint8_t> ebsp) {
  std::vector<uint8_t> out;
  out.reserve(ebsp.size());
  int zeros = 0;
  for (uint8_t b : ebsp) {
    if (zeros >= 2 && b == 0x03) {
      zeros = 0;
      continue;
    }
    out.push_back(b);
    zeros = b == 0 ? zeros + 1 : 0;
  }
  return out;
}

size_t NalChunkSize(const NalUnit& nal) { return kStartCode.size() + 1 + EscapedSize(nal.rbsp); }

void AppendNal(std::vector<uint8_t>& out, const NalUnit& nal) {
  const size_t start = out.size();
  out.resize(start + NalChunkSize(nal));
  std::copy(kStartCode.begin(), kStartCode.end(), out.begin() + static_cast<std::ptrdiff_t>(start));
  out[start + kStartCode.size()] = nal.HeaderByte();
  EscapeInto(nal.rbsp, std::span(out).subspan(start + kStartCode.size() + 1));
}

std::vector<uint8_t> AnnexBParameterSets(const ParameterSets& params) {
  std::vector<uint8_t> out;
  AppendNal(out, params.sps);
  AppendNal(out, params.pps);
  return out;
}

std::vector<uint8_t> AnnexBFrame(const ParameterSets& params, const NalUnit& slice,
                                 bool include_parameter_sets) {
  std::vector<uint8_t> out;
  if (include_parameter_sets) out = AnnexBParameterSets(params);
  AppendNal(out, slice);
  return out;
}

}  // namespace videoservice
