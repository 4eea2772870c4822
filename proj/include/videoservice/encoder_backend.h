#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "videoservice/buffer_pool.h"
#include "videoservice/frame_source.h"
#include "videoservice/h264_encoder.h"
#include "videoservice/jpeg_encoder.h"
#include "videoservice/settings.h"

namespace videoservice {

enum class EncoderKind { kSoftware, kHardware };

const char* ToString(EncoderKind kind);
// "software" | "hardware"; throws ConfigError otherwise.
EncoderKind ParseEncoderKind(const std::string& text);

// Output of one encode. The payload lives in a pool buffer owned by the
// receiver of the unit: JFIF bytes for JPEG, an Annex-B chunk (start code +
// slice NAL) for H.264.
struct EncodedUnit {
  uint64_t seq = 0;
  std::chrono::nanoseconds timestamp{0};
  bool keyframe = false;
  BufferLease payload;
};

// Memory-to-memory encoder contract: frames go in by lease reference, units
// come out in submission order, at most `depth` frames in flight.
class EncoderBackend {
 public:
  static constexpr size_t kDefaultDepth = 2;

  virtual ~EncoderBackend() = default;

  virtual EncoderKind kind() const = 0;

  // Throws BackpressureError when `depth` frames are already in flight.
  // The frame's lease must stay live until the matching Collect returns.
  virtual void Submit(const RawFrame& frame) = 0;

  // Oldest pending unit. Throws ContractError when nothing is in flight.
  virtual EncodedUnit Collect() = 0;

  virtual size_t in_flight() const = 0;

  // Applies settings that affect encoding (JPEG quality). Called by the loop
  // at tick boundaries only.
  virtual void Configure(const CameraSettings& /*settings*/) {}

  // Bytes a newly attached consumer needs before the first keyframe
  // (SPS + PPS for H.264); empty for formats without stream headers.
  virtual std::vector<uint8_t> StreamHeader() const { return {}; }
};

// FIFO bookkeeping shared by backends that finish work inside Submit.
class SynchronousBackend : public EncoderBackend {
 public:
  SynchronousBackend(BufferPool& pool, size_t depth) : pool_(pool), depth_(depth) {}
  ~SynchronousBackend() override;

  void Submit(const RawFrame& frame) final;
  EncodedUnit Collect() final;
  size_t in_flight() const final { return done_.size(); }

 protected:
  virtual EncodedUnit Encode(const RawFrame& frame) = 0;

  // Copies encoder output into a fresh pool buffer (the device's capture
  // side); encoder-internal memory is not pool-visible.
  BufferLease StoreOutput(std::span<const uint8_t> bytes);

  BufferPool& pool_;

 private:
  size_t depth_;
  std::deque<EncodedUnit> done_;
};

class SoftwareJpegBackend : public SynchronousBackend {
 public:
  SoftwareJpegBackend(BufferPool& pool, int quality, size_t depth = kDefaultDepth);

  EncoderKind kind() const override { return EncoderKind::kSoftware; }
  void Configure(const CameraSettings& settings) override;
  int quality() const { return tables_.quality; }

 protected:
  EncodedUnit Encode(const RawFrame& frame) override;

 private:
  QuantTables tables_;
};

class SoftwareH264Backend : public SynchronousBackend {
 public:
  SoftwareH264Backend(BufferPool& pool, const FrameGeometry& geometry, size_t depth = kDefaultDepth);

  EncoderKind kind() const override { return EncoderKind::kSoftware; }
  std::vector<uint8_t> StreamHeader() const override;
  const ParameterSets& parameter_sets() const { return params_; }

 protected:
  EncodedUnit Encode(const RawFrame& frame) override;

 private:
  ParameterSets params_;
};

// Hardware kinds bind to a V4L2 memory-to-memory device. Device I/O is not
// part of this build, so they always throw UnavailableError; callers decide
// whether to fall back to software.
std::unique_ptr<EncoderBackend> OpenJpegBackend(EncoderKind kind, BufferPool& pool, int quality);
std::unique_ptr<EncoderBackend> OpenH264Backend(EncoderKind kind, BufferPool& pool,
                                                const FrameGeometry& geometry);

}  // namespace videoservice
