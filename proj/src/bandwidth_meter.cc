#include "videoservice/bandwidth_meter.h"

#include "videoservice/errors.h"

namespace videoservice {

BandwidthMeter::BandwidthMeter(std::chrono::nanoseconds window) : window_(window) {
  if (window_.count() <= 0) throw ConfigError("bandwidth window must be positive");
}

void BandwidthMeter::Record(uint64_t bytes, Clock::time_point now) {
  std::lock_guard lock(mutex_);
  samples_.emplace_back(now, bytes);
  window_bytes_ += bytes;
  total_bytes_ += bytes;
  Expire(now);
}

double BandwidthMeter::BitsPerSecond(Clock::time_point now) const {
  std::lock_guard lock(mutex_);
  Expire(now);
  return static_cast<double>(window_bytes_) * 8.0 / std::chrono::duration<double>(window_).count();
}

uint64_t BandwidthMeter::total_bytes() const {
  std::lock_guard lock(mutex_);
  return total_bytes_;
}

void BandwidthMeter::Expire(Clock::time_point now) const {
  // A sample stamped exactly `window` ago has left the window.
  while (!samples_.empty() && now - samples_.front().first >= window_) {
    window_bytes_ -= samples_.front().second;
    samples_.pop_front();
  }
}

}  // namespace videoservice
