#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "videoservice/benchmark.h"
#include "videoservice/errors.h"
#include "videoservice/service.h"
#include "videoservice/service_config.h"

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunFlags {
  std::string config_file;
  std::optional<uint16_t> h264_port;
  std::optional<uint16_t> mpjpeg_port;
  std::optional<uint16_t> control_port;
  std::optional<int> fps;
  std::optional<int> jpeg_quality;
  std::optional<std::string> jpeg_encoder;
  std::optional<std::string> source;
  std::optional<std::string> console_dir;
  std::optional<std::string> bind;
};

int Run(const RunFlags& flags) {
  using namespace videoservice;
  const std::optional<std::string> path =
      flags.config_file.empty() ? std::nullopt : std::optional<std::string>(flags.config_file);
  ServiceConfig config = LoadServiceConfig(path, ProcessEnvironment());

  // Flags override environment and file.
  nlohmann::json overrides = nlohmann::json::object();
  if (flags.h264_port) overrides["h264_port"] = *flags.h264_port;
  if (flags.mpjpeg_port) overrides["mpjpeg_port"] = *flags.mpjpeg_port;
  if (flags.control_port) overrides["control_port"] = *flags.control_port;
  if (flags.fps) overrides["fps"] = *flags.fps;
  if (flags.jpeg_quality) overrides["jpeg_quality"] = *flags.jpeg_quality;
  if (flags.jpeg_encoder) overrides["jpeg_encoder"] = *flags.jpeg_encoder;
  if (flags.source) overrides["source"] = *flags.source;
  if (flags.console_dir) overrides["console_dir"] = *flags.console_dir;
  if (flags.bind) overrides["bind_address"] = *flags.bind;
  ApplyJson(config, overrides);
  config.Validate();

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(config);
  service.Start();
  int received = 0;
  sigwait(&signals, &received);
  spdlog::info("signal {}, shutting down", received);
  service.Stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-stream video service: H.264 and MPJPEG over TCP with an HTTP control API"};
  app.require_subcommand(1);

  RunFlags flags;
  auto* run = app.add_subcommand("run", "Run the service until SIGINT/SIGTERM");
  run->add_option("--config", flags.config_file, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--h264-port", flags.h264_port, "H.264 stream port (default 8888)");
  run->add_option("--mpjpeg-port", flags.mpjpeg_port, "MPJPEG stream port (default 8887)");
  run->add_option("--control-port", flags.control_port, "Control API port (default 8886)");
  run->add_option("--fps", flags.fps, "Frame rate, 1-120");
  run->add_option("--jpeg-quality", flags.jpeg_quality, "JPEG quality, 0-95");
  run->add_option("--jpeg-encoder", flags.jpeg_encoder, "software | hardware");
  run->add_option("--source", flags.source, "synthetic | capture");
  run->add_option("--console-dir", flags.console_dir, "Directory with the web console");
  run->add_option("--bind", flags.bind, "Bind address (default 0.0.0.0)");

  std::string encoder = "software-jpeg";
  int width = 800, height = 600, iterations = 1000, quality = 70;
  bool json = false;
  auto* bench = app.add_subcommand("bench", "Time encoder calls on pre-rendered synthetic frames");
  bench->add_option("--encoder", encoder, "software-jpeg | hardware-jpeg | software-h264 | hardware-h264")
      ->capture_default_str();
  bench->add_option("--width", width)->capture_default_str();
  bench->add_option("--height", height)->capture_default_str();
  bench->add_option("--iterations", iterations)->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--quality", quality, "JPEG quality")->capture_default_str()->check(CLI::Range(0, 95));
  bench->add_flag("--json", json, "Print the report as JSON");

  app.add_subcommand("version", "Print the version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return Run(flags);
    if (*bench) {
      const auto report = videoservice::RunBenchmark(encoder, videoservice::FrameGeometry::Packed(width, height),
                                                     iterations, quality);
      std::cout << (json ? report.ToJson().dump(2) + "\n" : report.ToText());
      return 0;
    }
    std::cout << "videoservice " << kVersion << "\n";
    return 0;
  } catch (const videoservice::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
