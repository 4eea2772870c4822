#include "videoservice/encoder_backend.h"

#include <algorithm>
#include <cstring>

#include "videoservice/annexb.h"
#include "videoservice/errors.h"

namespace videoservice {
namespace {

constexpr const char* kJpegDevice = "/dev/video31";
constexpr const char* kH264Device = "/dev/video11";

Yuv420View MapFrame(BufferPool& pool, const RawFrame& frame) {
  const auto view = pool.MapView(frame.lease);
  if (view.size() < frame.geometry.frame_size()) throw ContractError("frame lease shorter than its geometry");
  return {frame.geometry, view};
}

[[noreturn]] void ThrowNoDevice(const char* what, const char* device) {
  throw UnavailableError(std::string("hardware ") + what + " encoder unavailable: no V4L2 backend for " +
                         device + " in this build");
}

}  // namespace

const char* ToString(EncoderKind kind) {
  return kind == EncoderKind::kHardware ? "hardware" : "software";
}

EncoderKind ParseEncoderKind(const std::string& text) {
  if (text == "software") return EncoderKind::kSoftware;
  if (text == "hardware") return EncoderKind::kHardware;
  throw ConfigError("encoder kind must be 'software' or 'hardware', got '" + text + "'");
}

SynchronousBackend::~SynchronousBackend() {
  for (const auto& unit : done_)
    if (pool_.IsLive(unit.payload)) pool_.Release(unit.payload);
}

void SynchronousBackend::Submit(const RawFrame& frame) {
  if (done_.size() >= depth_)
    throw BackpressureError("encoder has " + std::to_string(done_.size()) + " frames in flight (depth " +
                            std::to_string(depth_) + ")");
  done_.push_back(Encode(frame));
}

EncodedUnit SynchronousBackend::Collect() {
  if (done_.empty()) throw ContractError("collect without a submitted frame");
  EncodedUnit unit = done_.front();
  done_.pop_front();
  return unit;
}

BufferLease SynchronousBackend::StoreOutput(std::span<const uint8_t> bytes) {
  const BufferLease lease = pool_.Acquire(bytes.size());
  auto view = pool_.MapView(lease);
  std::memcpy(view.data(), bytes.data(), bytes.size());
  return lease;
}

SoftwareJpegBackend::SoftwareJpegBackend(BufferPool& pool, int quality, size_t depth)
    : SynchronousBackend(pool, depth), tables_(ScaledQuantTables(quality)) {}

void SoftwareJpegBackend::Configure(const CameraSettings& settings) {
  if (settings.jpeg_quality != tables_.quality) tables_ = ScaledQuantTables(settings.jpeg_quality);
}

EncodedUnit SoftwareJpegBackend::Encode(const RawFrame& frame) {
  const JpegImage image = EncodeJpeg(MapFrame(pool_, frame), tables_);
  return {frame.seq, frame.timestamp, true, StoreOutput(image.bytes)};
}

SoftwareH264Backend::SoftwareH264Backend(BufferPool& pool, const FrameGeometry& geometry, size_t depth)
    : SynchronousBackend(pool, depth), params_(MakeParameterSets(geometry.width, geometry.height)) {}

std::vector<uint8_t> SoftwareH264Backend::StreamHeader() const { return AnnexBParameterSets(params_); }

EncodedUnit SoftwareH264Backend::Encode(const RawFrame& frame) {
  const NalUnit slice = EncodeIpcm(params_, MapFrame(pool_, frame), static_cast<uint32_t>(frame.seq));
  // Escape straight into the output buffer.
  const BufferLease lease = pool_.Acquire(NalChunkSize(slice));
  auto view = pool_.MapView(lease);
  std::copy(kStartCode.begin(), kStartCode.end(), view.begin());
  view[kStartCode.size()] = slice.HeaderByte();
  EscapeInto(slice.rbsp, view.subspan(kStartCode.size() + 1));
  return {frame.seq, frame.timestamp, true, lease};
}

std::unique_ptr<EncoderBackend> OpenJpegBackend(EncoderKind kind, BufferPool& pool, int quality) {
  if (kind == EncoderKind::kHardware) ThrowNoDevice("JPEG", kJpegDevice);
  return std::make_unique<SoftwareJpegBackend>(pool, quality);
}

std::unique_ptr<EncoderBackend> OpenH264Backend(EncoderKind kind, BufferPool& pool,
                                                const FrameGeometry& geometry) {
  if (kind == EncoderKind::kHardware) ThrowNoDevice("H.264", kH264Device);
  return std::make_unique<SoftwareH264Backend>(pool, geometry);
}

}  // namespace videoservice
