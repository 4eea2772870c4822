#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"
#include "videoservice/annexb.h"
#include "videoservice/net.h"
#include "videoservice/probe_client.h"

namespace {

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

int Stats(const std::string& url) {
  // Accept "host:port", "http://host:port" or a full URL to the stats route.
  std::string base = url;
  if (!base.starts_with("http://")) base = "http://" + base;
  const auto path_at = base.find('/', 7);
  std::string path = path_at == std::string::npos ? "/api/stats" : base.substr(path_at);
  if (path == "/") path = "/api/stats";
  if (path_at != std::string::npos) base.resize(path_at);

  httplib::Client client(base);
  client.set_connection_timeout(5);
  auto response = client.Get(path);
  if (!response) {
    std::cerr << "probe: cannot reach " << base << ": " << httplib::to_string(response.error()) << "\n";
    return 1;
  }
  if (response->status != 200) {
    std::cerr << "probe: " << base << path << " returned " << response->status << "\n";
    return 1;
  }
  std::cout << nlohmann::json::parse(response->body).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stream recorder and validator for the video service"};
  app.require_subcommand(1);

  std::string address;
  std::string save_dir;
  std::string out_file;
  std::optional<uint64_t> count;
  double seconds = 30;

  auto* mpjpeg = app.add_subcommand("mpjpeg", "Read an MPJPEG stream, validate it, optionally save the JPEGs");
  mpjpeg->add_option("address", address, "host:port")->required();
  mpjpeg->add_option("--save-dir", save_dir, "Write each part as frame_NNNNNN.jpg");
  mpjpeg->add_option("--count", count, "Stop after N parts");
  mpjpeg->add_option("--seconds", seconds, "Give up after this long")->capture_default_str();

  auto* h264 = app.add_subcommand("h264", "Read an H.264 Annex-B stream, validate it, optionally record it");
  h264->add_option("address", address, "host:port")->required();
  h264->add_option("--out", out_file, "Write the received NAL units to this file");
  h264->add_option("--count", count, "Stop after N pictures");
  h264->add_option("--seconds", seconds, "Give up after this long")->capture_default_str();

  std::string url;
  auto* stats = app.add_subcommand("stats", "Print /api/stats of a running service");
  stats->add_option("url", url, "http://host:port")->required();

  CLI11_PARSE(app, argc, argv);
  if (*stats) return Stats(url);

  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);

  using namespace videoservice;
  probe::ProbeOptions options;
  try {
    std::tie(options.host, options.port) = net::SplitHostPort(address);
  } catch (const std::exception& e) {
    std::cerr << "probe: " << e.what() << "\n";
    return 2;
  }
  options.count = count;
  options.timeout = std::chrono::milliseconds(static_cast<long>(seconds * 1000));
  options.stop = &g_stop;

  try {
    probe::ProbeReport report;
    if (*mpjpeg) {
      if (!save_dir.empty()) std::filesystem::create_directories(save_dir);
      uint64_t index = 0;
      report = probe::ProbeMpjpeg(options, [&](probe::JpegPart&& part) {
        if (save_dir.empty()) return;
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06llu.jpg", static_cast<unsigned long long>(index++));
        std::ofstream(std::filesystem::path(save_dir) / name, std::ios::binary)
            .write(reinterpret_cast<const char*>(part.bytes.data()), static_cast<std::streamsize>(part.bytes.size()));
      });
    } else {
      std::ofstream out;
      if (!out_file.empty()) {
        out.open(out_file, std::ios::binary);
        if (!out) {
          std::cerr << "probe: cannot write " << out_file << "\n";
          return 2;
        }
      }
      // Only whole NAL units are recorded, re-framed with 4-byte start codes.
      std::vector<uint8_t> chunk;
      report = probe::ProbeH264(options, [&](probe::ParsedNal&& parsed) {
        if (!out.is_open()) return;
        chunk.clear();
        AppendNal(chunk, parsed.nal);
        out.write(reinterpret_cast<const char*>(chunk.data()), static_cast<std::streamsize>(chunk.size()));
      });
    }
    std::cout << report.ToJson().dump(2) << "\n";
    return report.framing_errors.empty() ? 0 : 3;
  } catch (const std::exception& e) {
    std::cerr << "probe: " << e.what() << "\n";
    return 1;
  }
}
