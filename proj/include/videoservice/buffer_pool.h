#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

namespace videoservice {

// Handle to a pooled memory region. A lease is a plain value: several lease
// values may alias the same region (see Import). The region stays valid until
// any of them is released; after that, every alias is stale.
struct BufferLease {
  int handle = -1;
  size_t offset = 0;
  size_t length = 0;
  uint64_t generation = 0;

  bool operator==(const BufferLease&) const = default;
};

// The two integers a consumer receives instead of the pixels themselves.
struct ExportedBuffer {
  int handle = -1;
  size_t offset = 0;
};

struct PoolStats {
  uint64_t copies = 0;
  uint64_t maps = 0;
  size_t live = 0;
  size_t capacity = 0;
};

// Fixed set of equally sized slots carved out of one contiguous region.
//
// The pool is the only place where image bytes are counted as copied:
// MapView hands out aliases (maps += 1), CopyOut is the single operation that
// moves bytes out (copies += 1 per call, regardless of the byte count).
//
// Slot bookkeeping is thread-safe. The bytes behind a view are not guarded;
// the owner of a frame sequences writes and CopyOut on the same region.
class BufferPool {
 public:
  BufferPool(size_t capacity, size_t max_buffer_size);

  BufferPool(const BufferPool&) = delete;
  BufferPool& operator=(const BufferPool&) = delete;

  // Leases a zero-filled region of `length` bytes. Throws ExhaustedError when
  // every slot is taken and ContractError when length exceeds the slot size.
  BufferLease Acquire(size_t length);

  // Releases the region. Throws LifetimeError if it is already released.
  void Release(const BufferLease& lease);

  // Zero-copy view of the region. Throws LifetimeError for stale leases.
  std::span<uint8_t> MapView(const BufferLease& lease);

  ExportedBuffer Export(const BufferLease& lease) const;
  BufferLease Import(const ExportedBuffer& exported);

  // Appends bytes [offset, offset + count) of the region to `sink`. The whole
  // region is copied when count is omitted.
  size_t CopyOut(const BufferLease& lease, std::vector<uint8_t>& sink);
  size_t CopyOut(const BufferLease& lease, std::vector<uint8_t>& sink, size_t offset, size_t count);

  bool IsLive(const BufferLease& lease) const;
  PoolStats Stats() const;
  size_t max_buffer_size() const { return slot_size_; }

 private:
  struct Slot {
    bool live = false;
    uint64_t generation = 0;
    size_t length = 0;
  };

  // Requires mutex_ held.
  const Slot& CheckLive(const BufferLease& lease) const;
  size_t SlotIndex(int handle) const;

  const size_t slot_size_;
  std::vector<uint8_t> storage_;
  std::vector<Slot> slots_;

  mutable std::mutex mutex_;
  size_t live_ = 0;
  std::atomic<uint64_t> copies_{0};
  std::atomic<uint64_t> maps_{0};
};

// Releases a lease on scope exit unless it was released already.
class LeaseGuard {
 public:
  LeaseGuard() = default;
  LeaseGuard(BufferPool& pool, BufferLease lease) : pool_(&pool), lease_(lease) {}
  ~LeaseGuard() { Reset(); }

  LeaseGuard(LeaseGuard&& other) noexcept : pool_(other.pool_), lease_(other.lease_) {
    other.pool_ = nullptr;
  }
  LeaseGuard& operator=(LeaseGuard&& other) noexcept;
  LeaseGuard(const LeaseGuard&) = delete;
  LeaseGuard& operator=(const LeaseGuard&) = delete;

  const BufferLease& get() const { return lease_; }
  explicit operator bool() const { return pool_ != nullptr; }
  void Reset();
  // Gives up ownership without releasing.
  BufferLease Detach() {
    pool_ = nullptr;
    return lease_;
  }

 private:
  BufferPool* pool_ = nullptr;
  BufferLease lease_;
};

}  // namespace videoservice
