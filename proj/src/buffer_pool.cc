#include "videoservice/buffer_pool.h"

#include <algorithm>
#include <cstring>
#include <string>

#include "videoservice/errors.h"

namespace videoservice {
namespace {

// Handles start above the standard descriptors, like the fds they stand in for.
constexpr int kFirstHandle = 3;

}  // namespace

BufferPool::BufferPool(size_t capacity, size_t max_buffer_size)
    : slot_size_(max_buffer_size), storage_(capacity * max_buffer_size), slots_(capacity) {
  if (capacity == 0 || max_buffer_size == 0) throw ConfigError("buffer pool needs capacity and slot size > 0");
}

size_t BufferPool::SlotIndex(int handle) const {
  if (handle < kFirstHandle || static_cast<size_t>(handle - kFirstHandle) >= slots_.size())
    throw LifetimeError("unknown buffer handle " + std::to_string(handle));
  return static_cast<size_t>(handle - kFirstHandle);
}

const BufferPool::Slot& BufferPool::CheckLive(const BufferLease& lease) const {
  const size_t index = SlotIndex(lease.handle);
  const Slot& slot = slots_[index];
  if (lease.offset != index * slot_size_)
    throw LifetimeError("offset " + std::to_string(lease.offset) + " does not match handle " +
                        std::to_string(lease.handle));
  if (!slot.live) throw LifetimeError("buffer " + std::to_string(lease.handle) + " was released");
  if (slot.generation != lease.generation)
    throw LifetimeError("stale lease for buffer " + std::to_string(lease.handle) + " (generation " +
                        std::to_string(lease.generation) + ", current " +
                        std::to_string(slot.generation) + ")");
  return slot;
}

BufferLease BufferPool::Acquire(size_t length) {
  if (length == 0 || length > slot_size_)
    throw ContractError("buffer length " + std::to_string(length) + " outside (0, " +
                        std::to_string(slot_size_) + "]");
  std::lock_guard lock(mutex_);
  auto it = std::find_if(slots_.begin(), slots_.end(), [](const Slot& s) { return !s.live; });
  if (it == slots_.end())
    throw ExhaustedError("buffer pool exhausted (" + std::to_string(slots_.size()) + " buffers leased)");
  const size_t index = static_cast<size_t>(it - slots_.begin());
  it->live = true;
  it->length = length;
  ++it->generation;
  ++live_;
  std::memset(storage_.data() + index * slot_size_, 0, length);
  return {kFirstHandle + static_cast<int>(index), index * slot_size_, length, it->generation};
}

void BufferPool::Release(const BufferLease& lease) {
  std::lock_guard lock(mutex_);
  CheckLive(lease);
  slots_[SlotIndex(lease.handle)].live = false;
  --live_;
}

std::span<uint8_t> BufferPool::MapView(const BufferLease& lease) {
  {
    std::lock_guard lock(mutex_);
    CheckLive(lease);
  }
  maps_.fetch_add(1, std::memory_order_relaxed);
  return {storage_.data() + lease.offset, lease.length};
}

ExportedBuffer BufferPool::Export(const BufferLease& lease) const {
  std::lock_guard lock(mutex_);
  CheckLive(lease);
  return {lease.handle, lease.offset};
}

BufferLease BufferPool::Import(const ExportedBuffer& exported) {
  std::lock_guard lock(mutex_);
  const size_t index = SlotIndex(exported.handle);
  if (exported.offset != index * slot_size_)
    throw LifetimeError("no buffer at handle " + std::to_string(exported.handle) + " offset " +
                        std::to_string(exported.offset));
  const Slot& slot = slots_[index];
  if (!slot.live)
    throw LifetimeError("import of released buffer " + std::to_string(exported.handle));
  return {exported.handle, exported.offset, slot.length, slot.generation};
}

size_t BufferPool::CopyOut(const BufferLease& lease, std::vector<uint8_t>& sink) {
  return CopyOut(lease, sink, 0, lease.length);
}

size_t BufferPool::CopyOut(const BufferLease& lease, std::vector<uint8_t>& sink, size_t offset,
                           size_t count) {
  {
    std::lock_guard lock(mutex_);
    CheckLive(lease);
  }
  if (offset > lease.length || count > lease.length - offset)
    throw ContractError("copy range exceeds buffer length " + std::to_string(lease.length));
  const uint8_t* begin = storage_.data() + lease.offset + offset;
  sink.insert(sink.end(), begin, begin + count);
  copies_.fetch_add(1, std::memory_order_relaxed);
  return count;
}

bool BufferPool::IsLive(const BufferLease& lease) const {
  std::lock_guard lock(mutex_);
  try {
    CheckLive(lease);
    return true;
  } catch (const LifetimeError&) {
    return false;
  }
}

PoolStats BufferPool::Stats() const {
  std::lock_guard lock(mutex_);
  return {copies_.load(), maps_.load(), live_, slots_.size()};
}

LeaseGuard& LeaseGuard::operator=(LeaseGuard&& other) noexcept {
  if (this != &other) {
    Reset();
    pool_ = other.pool_;
    lease_ = other.lease_;
    other.pool_ = nullptr;
  }
  return *this;
}

void LeaseGuard::Reset() {
  if (pool_ == nullptr) return;
  if (pool_->IsLive(lease_)) pool_->Release(lease_);
  pool_ = nullptr;
}

}  // namespace videoservice
