#include <gtest/gtest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "support/jpeg_decoder.h"
#include "support/service_harness.h"
#include "videoservice/annexb.h"
#include "videoservice/bandwidth_meter.h"
#include "videoservice/errors.h"
#include "videoservice/frame_source.h"
#include "videoservice/jpeg_encoder.h"
#include "videoservice/mpjpeg.h"
#include "videoservice/probe_client.h"
#include "videoservice/service.h"
#include "videoservice/service_config.h"
#include "videoservice/stream_probe.h"

namespace videoservice {
namespace {

using namespace std::chrono_literals;
using Bytes = std::vector<uint8_t>;
using SteadyClock = std::chrono::steady_clock;

double Seconds(SteadyClock::duration d) { return std::chrono::duration<double>(d).count(); }

// The deployed port layout: 8888 H.264, 8887 MPJPEG, 8886 control.
ServiceConfig DeployedConfig() {
  ServiceConfig config;
  config.bind_address = "127.0.0.1";
  config.settings.fps = 30;
  config.settings.jpeg_quality = 70;
  return config;
}

probe::ProbeOptions ProbeAt(uint16_t port) {
  probe::ProbeOptions options;
  options.port = port;
  options.timeout = 20s;
  return options;
}

// Runs a probe on its own thread until `stop` is set.
struct BackgroundProbe {
  std::atomic<bool> stop{false};
  probe::ProbeReport report;
  std::thread thread;

  template <typename Fn>
  explicit BackgroundProbe(Fn run) {
    thread = std::thread([this, run] { report = run(&stop); });
  }
  probe::ProbeReport Finish() {
    stop = true;
    thread.join();
    return report;
  }
  ~BackgroundProbe() {
    if (thread.joinable()) Finish();
  }
};

// ---------------------------------------------------------------------------

TEST(Acceptance, C01_MpjpegWireConformance) {
  const auto started = SteadyClock::now();
  Service service(DeployedConfig());
  service.Start();

  std::vector<Bytes> payloads;
  probe::ProbeOptions options = ProbeAt(service.mpjpeg_port());
  options.count = 60;
  const probe::ProbeReport report =
      probe::ProbeMpjpeg(options, [&](probe::JpegPart&& part) { payloads.push_back(std::move(part.bytes)); });
  const double runtime = Seconds(SteadyClock::now() - started);
  service.Stop();

  EXPECT_EQ(report.units_received, 60u);
  ASSERT_EQ(payloads.size(), 60u);
  EXPECT_TRUE(report.framing_errors.empty()) << report.ToJson().dump();
  for (const Bytes& jpeg : payloads) {
    ASSERT_GE(jpeg.size(), 4u);
    EXPECT_EQ(jpeg[0], 0xFF);
    EXPECT_EQ(jpeg[1], 0xD8);
    EXPECT_EQ(jpeg[jpeg.size() - 2], 0xFF);
    EXPECT_EQ(jpeg[jpeg.size() - 1], 0xD9);
    const Yuv420Image decoded = testing_support::DecodeJpegYuv(jpeg);
    EXPECT_EQ(decoded.geometry.width, 800);
    EXPECT_EQ(decoded.geometry.height, 600);
  }
  std::printf("  mpjpeg: 60 parts in %.2f s\n", runtime);
  EXPECT_LT(runtime, 5.0);
}

TEST(Acceptance, C02_H264WireConformance) {
  const auto started = SteadyClock::now();
  Service service(DeployedConfig());
  ASSERT_EQ(service.h264_port(), 8888);
  service.Start();

  std::vector<probe::ParsedNal> nals;
  Bytes raw;
  probe::ProbeOptions options = ProbeAt(service.h264_port());
  options.count = 60;
  options.raw_sink = [&](std::span<const uint8_t> bytes) { raw.insert(raw.end(), bytes.begin(), bytes.end()); };
  const probe::ProbeReport report =
      probe::ProbeH264(options, [&](probe::ParsedNal&& nal) { nals.push_back(std::move(nal)); });
  service.Stop();

  EXPECT_TRUE(report.framing_errors.empty()) << report.ToJson().dump();
  EXPECT_GE(report.frames_received, 60u);
  ASSERT_GE(nals.size(), 3u);
  EXPECT_EQ(nals[0].nal.type, kNalTypeSps);
  EXPECT_EQ(nals[1].nal.type, kNalTypePps);
  EXPECT_EQ(nals[2].nal.type, kNalTypeIdr);
  EXPECT_TRUE(probe::FindStartCodeEmulations(raw).empty());

  const probe::SpsInfo sps = probe::ParseSps(nals[0].nal.rbsp);
  const probe::PpsInfo pps = probe::ParsePps(nals[1].nal.rbsp);
  size_t compared = 0;
  for (size_t i = 2; i < nals.size() && compared < 60; ++i) {
    if (nals[i].nal.type != kNalTypeIdr) continue;
    const probe::DecodedPicture picture = probe::DecodeIpcm(sps, pps, nals[i].nal);
    const Yuv420Image expected = testing_support::ReferencePattern(picture.idr_pic_id, 1920, 1080, {});
    ASSERT_EQ(picture.image.geometry, expected.geometry);
    ASSERT_TRUE(picture.image.data == expected.data) << "picture " << picture.idr_pic_id;
    ++compared;
  }
  EXPECT_EQ(compared, 60u);
  const double runtime = Seconds(SteadyClock::now() - started);
  std::printf("  h264: %zu pictures verified in %.2f s\n", compared, runtime);
  EXPECT_LT(runtime, 10.0);
}

TEST(Acceptance, C03_LateJoinStartsAtParameterSets) {
  Service service(DeployedConfig());
  service.Start();
  std::this_thread::sleep_for(1s);
  for (int join = 0; join < 5; ++join) {
    std::vector<int> types;
    Bytes head;
    probe::ProbeOptions options = ProbeAt(service.h264_port());
    options.count = 2;
    options.raw_sink = [&](std::span<const uint8_t> bytes) {
      if (head.size() < 5) head.insert(head.end(), bytes.begin(), bytes.begin() + std::min<size_t>(bytes.size(), 5));
    };
    const probe::ProbeReport report =
        probe::ProbeH264(options, [&](probe::ParsedNal&& nal) { types.push_back(nal.nal.type); });
    EXPECT_TRUE(report.framing_errors.empty());
    ASSERT_GE(types.size(), 3u);
    EXPECT_EQ(std::vector<int>(types.begin(), types.begin() + 3), (std::vector<int>{7, 8, 5})) << "join " << join;
    ASSERT_GE(head.size(), 5u);
    EXPECT_EQ(Bytes(head.begin(), head.begin() + 5), (Bytes{0, 0, 0, 1, 0x67}));
    std::this_thread::sleep_for(std::chrono::milliseconds(37 * (join + 1)));
  }
  service.Stop();
}

TEST(Acceptance, C04_SingleCopyPerStream) {
  Service service(testing_support::TestServiceConfig());
  BackgroundProbe h264([port = service.h264_port()](const std::atomic<bool>* stop) {
    probe::ProbeOptions o = ProbeAt(port);
    o.stop = stop;
    return probe::ProbeH264(o);
  });
  BackgroundProbe mpjpeg([port = service.mpjpeg_port()](const std::atomic<bool>* stop) {
    probe::ProbeOptions o = ProbeAt(port);
    o.stop = stop;
    return probe::ProbeMpjpeg(o);
  });
  ASSERT_TRUE(testing_support::WaitForClientCount(service.h264_server(), 1));
  ASSERT_TRUE(testing_support::WaitForStreamingClients(service.mpjpeg_server(), 1));

  const PoolStats before = service.pool().Stats();
  for (int i = 0; i < 100; ++i) {
    const TickReport tick = service.pipeline().Tick();
    ASSERT_FALSE(tick.skipped);
    ASSERT_FALSE(tick.h264_failed);
    ASSERT_FALSE(tick.jpeg_failed);
  }
  const PoolStats after = service.pool().Stats();
  const probe::ProbeReport h264_report = h264.Finish();
  const probe::ProbeReport mpjpeg_report = mpjpeg.Finish();

  std::printf("  copies %llu maps %llu live %zu -> %zu\n",
              static_cast<unsigned long long>(after.copies - before.copies),
              static_cast<unsigned long long>(after.maps - before.maps), before.live, after.live);
  EXPECT_EQ(after.copies - before.copies, 200u);
  EXPECT_GE(after.maps - before.maps, 200u);
  EXPECT_EQ(after.live, before.live);
  EXPECT_EQ(after.live, 0u);
  EXPECT_TRUE(h264_report.framing_errors.empty());
  EXPECT_TRUE(mpjpeg_report.framing_errors.empty());
}

TEST(Acceptance, C05_JpegQualityBehaviour) {
  const Yuv420Image frame = SynthFrame(0, FrameGeometry::Packed(800, 600), {});
  size_t previous_size = 0;
  double psnr10 = 0;
  double psnr90 = 0;
  for (int q : {10, 30, 50, 70, 90}) {
    const JpegImage jpeg = EncodeJpeg(frame.view(), ScaledQuantTables(q));
    const double psnr = testing_support::Psnr(testing_support::DecodeJpegYuv(jpeg.bytes).view(), frame.view());
    std::printf("  quality %d: %zu bytes, PSNR %.2f dB\n", q, jpeg.bytes.size(), psnr);
    EXPECT_GE(jpeg.bytes.size(), previous_size) << "quality " << q;
    previous_size = jpeg.bytes.size();
    if (q == 10) psnr10 = psnr;
    if (q == 90) psnr90 = psnr;
  }
  EXPECT_GE(psnr90, 30.0);
  EXPECT_GE(psnr90, psnr10);

  EXPECT_THROW(ScaledQuantTables(96), ConfigError);
  const auto file = std::filesystem::temp_directory_path() / "videoservice_quality96.json";
  std::ofstream(file) << R"({"jpeg_quality": 96})";
  const EnvLookup no_env = [](const std::string&) { return std::optional<std::string>(); };
  EXPECT_THROW(LoadServiceConfig(file.string(), no_env), ConfigError);
  std::filesystem::remove(file);
  const EnvLookup env96 = [](const std::string& name) {
    return name == "VIDEOSERVICE_JPEG_QUALITY" ? std::optional<std::string>("96") : std::nullopt;
  };
  EXPECT_THROW(LoadServiceConfig(std::nullopt, env96), ConfigError);
  Service service(testing_support::TestServiceConfig());
  const auto r = testing_support::HttpRequest(service.control_port(), "PUT", "/api/settings", R"({"jpeg_quality": 96})");
  EXPECT_GE(r.status, 400);
  EXPECT_LT(r.status, 500);
  EXPECT_EQ(service.settings().Snapshot().jpeg_quality, 70);
}

TEST(Acceptance, C06_BackpressureIsolation) {
  Service service(DeployedConfig());
  service.Start();

  net::Socket stalled_mpjpeg = testing_support::StalledClient(service.mpjpeg_port(), true);
  net::Socket stalled_h264 = testing_support::StalledClient(service.h264_port(), false);

  std::atomic<uint64_t> intact{0};
  BackgroundProbe fast_h264([port = service.h264_port()](const std::atomic<bool>* stop) {
    probe::ProbeOptions o = ProbeAt(port);
    o.stop = stop;
    return probe::ProbeH264(o);
  });

  const RunSummary before = service.pipeline().summary();
  const auto window_start = SteadyClock::now();
  probe::ProbeOptions options = ProbeAt(service.mpjpeg_port());
  options.timeout = 5s;
  const probe::ProbeReport fast = probe::ProbeMpjpeg(options, [&](probe::JpegPart&& part) {
    if (!probe::ValidateJpeg(part.bytes)) ++intact;
  });
  const RunSummary after = service.pipeline().summary();
  const double window = Seconds(SteadyClock::now() - window_start);
  const probe::ProbeReport fast_h264_report = fast_h264.Finish();

  uint64_t stalled_drops = 0;
  for (const SessionStats& s : service.mpjpeg_server().SessionSnapshot()) stalled_drops = std::max(stalled_drops, s.frames_dropped);
  const ServerTotals h264_totals = service.h264_server().totals();
  const double tick_rate = static_cast<double>(after.ticks + after.skipped - before.ticks - before.skipped) / window;
  service.Stop();

  std::printf("  fast client: %llu intact parts; tick rate %.2f/s; stalled drops %llu; h264 overflow disconnects %llu\n",
              static_cast<unsigned long long>(intact.load()), tick_rate,
              static_cast<unsigned long long>(stalled_drops),
              static_cast<unsigned long long>(h264_totals.overflow_disconnects));
  EXPECT_TRUE(fast.framing_errors.empty()) << fast.ToJson().dump();
  EXPECT_GE(intact.load(), 140u);
  EXPECT_GE(tick_rate, 30 * 0.95);
  EXPECT_LE(tick_rate, 30 * 1.05);
  EXPECT_GT(stalled_drops, 0u);
  EXPECT_GE(h264_totals.overflow_disconnects, 1u);
  EXPECT_TRUE(fast_h264_report.framing_errors.empty()) << fast_h264_report.ToJson().dump();
  EXPECT_GT(fast_h264_report.frames_received, 100u);
}

TEST(Acceptance, C07_BrightnessControlLoop) {
  Service service(DeployedConfig());
  service.Start();

  struct Part {
    SteadyClock::time_point at;
    Bytes jpeg;
  };
  std::mutex mutex;
  std::vector<Part> parts;
  BackgroundProbe probe([&, port = service.mpjpeg_port()](const std::atomic<bool>* stop) {
    probe::ProbeOptions o = ProbeAt(port);
    o.stop = stop;
    return probe::ProbeMpjpeg(o, [&](probe::JpegPart&& part) {
      std::lock_guard lock(mutex);
      parts.push_back({SteadyClock::now(), std::move(part.bytes)});
    });
  });
  auto part_count = [&] {
    std::lock_guard lock(mutex);
    return parts.size();
  };
  while (part_count() < 5) std::this_thread::sleep_for(10ms);

  const uint64_t version_before = service.settings().Snapshot().version;
  const auto put_at = SteadyClock::now();
  const auto put = testing_support::HttpRequest(service.control_port(), "PUT", "/api/settings", R"({"brightness": 1.0})");
  EXPECT_EQ(put.status, 200);
  EXPECT_EQ(service.settings().Snapshot().version, version_before + 1);
  const auto deadline = SteadyClock::now() + 5s;
  size_t first_after = 0;
  for (;;) {
    {
      std::lock_guard lock(mutex);
      first_after = 0;
      while (first_after < parts.size() && parts[first_after].at < put_at) ++first_after;
      if (parts.size() >= first_after + 3) break;
    }
    ASSERT_LT(SteadyClock::now(), deadline);
    std::this_thread::sleep_for(10ms);
  }
  const probe::ProbeReport report = probe.Finish();
  EXPECT_TRUE(report.framing_errors.empty());

  const double baseline = testing_support::MeanLuma(testing_support::DecodeJpegYuv(parts[first_after - 1].jpeg).view());
  double shifts[3];
  for (int i = 0; i < 3; ++i)
    shifts[i] = testing_support::MeanLuma(testing_support::DecodeJpegYuv(parts[first_after + i].jpeg).view()) - baseline;
  std::printf("  baseline mean luma %.2f; shifts after PUT: %.2f %.2f %.2f (required >= 80 by the second part)\n",
              baseline, shifts[0], shifts[1], shifts[2]);
  // The change is visible within 2 frames and stays.
  EXPECT_GE(std::max(shifts[0], shifts[1]), 80.0);
  EXPECT_GE(shifts[2], 80.0);

  const uint64_t version = service.settings().Snapshot().version;
  for (const char* bad : {R"({"brightness": 1.5})", R"({"no_such_key": 1})", R"({"fps": "fast"})", "not json"}) {
    const auto r = testing_support::HttpRequest(service.control_port(), "PUT", "/api/settings", bad);
    EXPECT_EQ(r.status, 400) << bad;
  }
  EXPECT_EQ(service.settings().Snapshot().version, version);
  service.Stop();
}

TEST(Acceptance, C08_BandwidthMeterConstantFeed) {
  // 30 parts of 10,000 bytes per second for 8 s of simulated time.
  BandwidthMeter simulated(5s);
  const auto t0 = BandwidthMeter::Clock::time_point{} + 1h;
  const auto period = std::chrono::nanoseconds(1'000'000'000 / 30);
  auto t = t0;
  for (int i = 0; i < 8 * 30; ++i, t += period) simulated.Record(10'000, t);
  const double simulated_bps = simulated.BitsPerSecond(t);

  // The same feed in real time for 5.5 s.
  BandwidthMeter live(5s);
  auto next = SteadyClock::now();
  const auto end = next + 5500ms;
  while (next < end) {
    std::this_thread::sleep_until(next);
    live.Record(10'000);
    next += period;
  }
  const double live_bps = live.BitsPerSecond();
  std::printf("  simulated %.0f bit/s, live %.0f bit/s (target 2400000)\n", simulated_bps, live_bps);
  EXPECT_NEAR(simulated_bps, 2.4e6, 2.4e6 * 0.05);
  EXPECT_NEAR(live_bps, 2.4e6, 2.4e6 * 0.05);
}

TEST(Acceptance, C09_BenchmarkHarness) {
  const std::string command = std::string(VIDEOSERVICE_BIN) +
                              " bench --encoder software-jpeg --width 800 --height 600 --iterations 1000 --json";
  FILE* pipe = popen(command.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string output;
  char buffer[4096];
  while (size_t n = fread(buffer, 1, sizeof buffer, pipe)) output.append(buffer, n);
  const int status = pclose(pipe);
  ASSERT_EQ(status, 0) << output;
  const nlohmann::json report = nlohmann::json::parse(output);
  std::printf("  %s\n", report.dump().c_str());
  ASSERT_TRUE(report.contains("mean_ms_per_frame"));
  ASSERT_TRUE(report.contains("p95_ms"));
  ASSERT_TRUE(report.contains("max_sustainable_fps"));
  EXPECT_EQ(report["iterations"], 1000);
  const double mean = report["mean_ms_per_frame"];
  const double total = report["total_ms"];
  EXPECT_NEAR(mean * 1000, total, total * 0.01);
}

// Entropy-coded bytes with 0xFF stuffed, wrapped as a minimal JPEG.
Bytes RandomJpeg(std::mt19937& rng, const std::string& embed) {
  Bytes jpeg = {0xFF, 0xD8, 0xFF, 0xDA, 0x00, 0x02};
  const size_t n = rng() % 4000;
  for (size_t i = 0; i < n; ++i) {
    const auto b = static_cast<uint8_t>(rng());
    jpeg.push_back(b);
    if (b == 0xFF) jpeg.push_back(0x00);
    if (i == n / 2) jpeg.insert(jpeg.end(), embed.begin(), embed.end());
  }
  jpeg.push_back(0xFF);
  jpeg.push_back(0xD9);
  return jpeg;
}

TEST(Acceptance, C10_CodecInverseProperties) {
  std::mt19937 rng(77);
  for (int i = 0; i < 1000; ++i) {
    Bytes raw(rng() % 2048);
    for (auto& b : raw) b = static_cast<uint8_t>(rng() % 3 == 0 ? rng() : rng() % 4);
    const Bytes escaped = EscapeEbsp(raw);
    ASSERT_TRUE(probe::FindStartCodeEmulations(escaped).empty()) << "trial " << i;
    ASSERT_EQ(UnescapeEbsp(escaped), raw) << "trial " << i;
  }

  const std::string charset = "ABCxyz0189'+_.-";
  for (int i = 0; i < 100; ++i) {
    MultipartConfig config;
    config.boundary.clear();
    const size_t length = 1 + rng() % 70;
    for (size_t k = 0; k < length; ++k) config.boundary += charset[rng() % charset.size()];
    const std::string delimiter = "\r\n--" + config.boundary + "\r\nContent-Length: 5\r\n\r\n";

    const std::string preamble = ResponsePreamble(config);
    Bytes stream(preamble.begin(), preamble.end());
    std::vector<Bytes> sent;
    const int parts = 1 + static_cast<int>(rng() % 4);
    for (int p = 0; p < parts; ++p) {
      sent.push_back(RandomJpeg(rng, p % 2 == 0 ? delimiter : std::string("--") + config.boundary));
      const Bytes part = WrapPart(sent.back(), config);
      stream.insert(stream.end(), part.begin(), part.end());
    }
    const probe::MpjpegParseResult parsed = probe::ParseMpjpeg(stream);
    ASSERT_TRUE(parsed.report.framing_errors.empty()) << "trial " << i << ": " << parsed.report.ToJson().dump();
    ASSERT_EQ(parsed.payloads, sent) << "trial " << i;
  }
}

}  // namespace
}  // namespace videoservice
