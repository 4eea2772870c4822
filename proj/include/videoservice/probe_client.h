#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "videoservice/stream_probe.h"

namespace videoservice::probe {

struct ProbeOptions {
  std::string host = "127.0.0.1";
  uint16_t port = 0;
  // Stop after this many pictures (H.264 slices) or parts (MPJPEG).
  std::optional<uint64_t> count;
  // Hard limit on the whole probe.
  std::chrono::milliseconds timeout{30000};
  // Send "GET / HTTP/1.1" first (MPJPEG). Raw probes may stay silent.
  bool send_request = true;
  std::string request_path = "/";
  int receive_buffer = 0;
  // Every received byte, in order, before parsing.
  std::function<void(std::span<const uint8_t>)> raw_sink;
  const std::atomic<bool>* stop = nullptr;
};

// Connects, parses until count/timeout/stop/close, and returns the report
// with bandwidth measured over the connection lifetime. Connection failures
// throw Error.
ProbeReport ProbeMpjpeg(const ProbeOptions& options, MpjpegParser::PartCallback on_part = {});
ProbeReport ProbeH264(const ProbeOptions& options, AnnexBParser::NalCallback on_nal = {});

}  // namespace videoservice::probe
