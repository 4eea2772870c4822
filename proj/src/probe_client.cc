#include "videoservice/probe_client.h"

#include <vector>

#include "videoservice/net.h"

namespace videoservice::probe {
namespace {

template <typename Parser>
ProbeReport Drive(const ProbeOptions& options, Parser& parser, const std::function<bool()>& done) {
  using Clock = std::chrono::steady_clock;
  net::Socket socket = net::Connect(options.host, options.port, options.receive_buffer);
  const auto started = Clock::now();
  if (options.send_request) {
    const std::string request = "GET " + options.request_path + " HTTP/1.1\r\nHost: " + options.host +
                                "\r\nAccept: */*\r\n\r\n";
    socket.SendAll(request);
  }
  std::vector<uint8_t> buffer(256 * 1024);
  const auto deadline = started + options.timeout;
  while (!done()) {
    if (options.stop != nullptr && options.stop->load()) break;
    const auto now = Clock::now();
    if (now >= deadline) break;
    const auto wait = std::min(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now),
                               std::chrono::milliseconds(100));
    if (!socket.WaitReadable(wait)) continue;
    const long n = socket.Receive(buffer);
    if (n <= 0) break;
    const std::span<const uint8_t> chunk(buffer.data(), static_cast<size_t>(n));
    if (options.raw_sink) options.raw_sink(chunk);
    parser.Feed(chunk);
  }
  const bool stopped_early = done();
  // Cut short by the count: the tail is an unfinished unit, not truncation.
  if (!stopped_early) parser.Finish();
  ProbeReport report = parser.report();
  const double seconds = std::chrono::duration<double>(Clock::now() - started).count();
  report.bandwidth_bps = seconds > 0 ? static_cast<double>(report.bytes_received) * 8.0 / seconds : 0;
  return report;
}

}  // namespace

ProbeReport ProbeMpjpeg(const ProbeOptions& options, MpjpegParser::PartCallback on_part) {
  MpjpegParser parser(std::move(on_part));
  return Drive(options, parser, [&] { return options.count && parser.report().units_received >= *options.count; });
}

ProbeReport ProbeH264(const ProbeOptions& options, AnnexBParser::NalCallback on_nal) {
  ProbeOptions raw = options;
  raw.send_request = false;
  // A NAL is only complete once the next start code arrives, so count+1
  // slices are awaited before stopping.
  uint64_t slices = 0;
  AnnexBParser parser([&](ParsedNal&& nal) {
    const bool slice = nal.nal.type == kNalTypeIdr || nal.nal.type == kNalTypeSlice;
    if (options.count && slice && slices >= *options.count) return;
    if (slice) ++slices;
    if (on_nal) on_nal(std::move(nal));
  });
  return Drive(raw, parser, [&] { return options.count && slices >= *options.count; });
}

}  // namespace videoservice::probe
