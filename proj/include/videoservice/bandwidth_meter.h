#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <mutex>

namespace videoservice {

// Sliding-window byte rate: bytes recorded in the last `window` times 8,
// divided by the window length. Thread-safe.
class BandwidthMeter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit BandwidthMeter(std::chrono::nanoseconds window = std::chrono::seconds(5));

  void Record(uint64_t bytes, Clock::time_point now = Clock::now());
  double BitsPerSecond(Clock::time_point now = Clock::now()) const;
  uint64_t total_bytes() const;
  std::chrono::nanoseconds window() const { return window_; }

 private:
  // Requires mutex_ held.
  void Expire(Clock::time_point now) const;

  const std::chrono::nanoseconds window_;
  mutable std::mutex mutex_;
  mutable std::deque<std::pair<Clock::time_point, uint64_t>> samples_;
  mutable uint64_t window_bytes_ = 0;
  uint64_t total_bytes_ = 0;
};

}  // namespace videoservice
