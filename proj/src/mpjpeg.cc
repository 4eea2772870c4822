#include "videoservice/mpjpeg.h"

#include <cstdio>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

bool IsBoundaryChar(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'' ||
         c == '+' || c == '_' || c == '.' || c == '-';
}

}  // namespace

void MultipartConfig::Validate() const {
  if (boundary.empty() || boundary.size() > 70)
    throw ConfigError("multipart boundary must be 1-70 characters");
  for (char c : boundary)
    if (!IsBoundaryChar(c))
      throw ConfigError("multipart boundary contains illegal character '" + std::string(1, c) + "'");
}

std::string ResponsePreamble(const MultipartConfig& config) {
  config.Validate();
  return "HTTP/1.1 200 OK\r\n"
         "Connection: close\r\n"
         "Cache-Control: no-store\r\n"
         "Content-Type: multipart/x-mixed-replace; boundary=" +
         config.boundary + "\r\n\r\n";
}

std::string PartHeader(size_t payload_length, const MultipartConfig& config,
                       std::optional<std::chrono::nanoseconds> timestamp) {
  std::string header = "--" + config.boundary +
                       "\r\n"
                       "Content-Type: image/jpeg\r\n"
                       "Content-Length: " +
                       std::to_string(payload_length) + "\r\n";
  if (config.include_timestamp_header && timestamp) {
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(*timestamp).count();
    char text[48];
    std::snprintf(text, sizeof text, "X-Timestamp: %lld.%06lld\r\n", static_cast<long long>(micros / 1000000),
                  static_cast<long long>(micros % 1000000));
    header += text;
  }
  header += "\r\n";
  return header;
}

std::vector<uint8_t> WrapPart(std::span<const uint8_t> jpeg, const MultipartConfig& config,
                              std::optional<std::chrono::nanoseconds> timestamp) {
  const std::string header = PartHeader(jpeg.size(), config, timestamp);
  std::vector<uint8_t> part;
  part.reserve(header.size() + jpeg.size() + kPartTrailer.size());
  part.insert(part.end(), header.begin(), header.end());
  part.insert(part.end(), jpeg.begin(), jpeg.end());
  part.insert(part.end(), kPartTrailer.begin(), kPartTrailer.end());
  return part;
}

}  // namespace videoservice
