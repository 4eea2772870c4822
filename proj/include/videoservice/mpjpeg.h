#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace videoservice {

struct MultipartConfig {
  std::string boundary = "frame";
  // Adds "X-Timestamp: <seconds>.<micros>" to each part header.
  bool include_timestamp_header = false;

  // Boundary must be 1-70 characters of [A-Za-z0-9'+_.-]. Throws ConfigError.
  void Validate() const;
};

inline constexpr std::string_view kPartTrailer = "\r\n";
inline constexpr std::string_view kMpjpegContentType = "multipart/x-mixed-replace";

// "HTTP/1.1 200 OK\r\nConnection: close\r\nCache-Control: no-store\r\n"
// "Content-Type: multipart/x-mixed-replace; boundary=<b>\r\n\r\n"
std::string ResponsePreamble(const MultipartConfig& config);

// "--<b>\r\nContent-Type: image/jpeg\r\nContent-Length: <n>\r\n\r\n"
std::string PartHeader(size_t payload_length, const MultipartConfig& config,
                       std::optional<std::chrono::nanoseconds> timestamp = std::nullopt);

// PartHeader + payload + "\r\n".
std::vector<uint8_t> WrapPart(std::span<const uint8_t> jpeg, const MultipartConfig& config,
                              std::optional<std::chrono::nanoseconds> timestamp = std::nullopt);

}  // namespace videoservice
