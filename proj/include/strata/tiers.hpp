#pragma once
// Storage tiers behind one allocator interface.
//
// Three backings: a volatile in-memory arena (dram), a memory-mapped file
// arena with byte-granular access (emulated pmem), and a directory-of-blobs
// store with an append-only index (disk). Allocation is bump-style: offsets
// are handed out once and never reused; release() only returns quota.
// Variable payloads cross tier boundaries as length-prefixed buffers, and
// buffer traffic on the block tier counts as (de)serialization events.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strata/common.hpp"

namespace strata {

using TierIndex = uint8_t;

inline constexpr uint64_t kMaxTierOffset = (uint64_t(1) << 56) - 1;

// Packed 64-bit reference: top 8 bits tier id, low 56 bits arena offset.
// Value 0 is reserved as null; tier-0 arenas never hand out offset 0.
class Handle {
 public:
  constexpr Handle() = default;

  static Handle pack(TierIndex tier, uint64_t offset) {
    if (offset > kMaxTierOffset) fail(Errc::out_of_bounds, "handle offset exceeds 56 bits");
    return Handle((uint64_t(tier) << 56) | offset);
  }
  static constexpr Handle from_raw(uint64_t raw) { return Handle(raw); }

  constexpr uint64_t raw() const { return raw_; }
  constexpr TierIndex tier() const { return static_cast<TierIndex>(raw_ >> 56); }
  constexpr uint64_t offset() const { return raw_ & kMaxTierOffset; }
  constexpr bool null() const { return raw_ == 0; }

  friend constexpr bool operator==(Handle a, Handle b) = default;

 private:
  explicit constexpr Handle(uint64_t raw) : raw_(raw) {}
  uint64_t raw_ = 0;
};

// Injected per-operation delay: ns_access + bytes * ns_byte, waited from the
// start of the operation so the op's own cost is absorbed into the budget.
struct SyntheticLatency {
  double read_ns_per_access = 0;
  double write_ns_per_access = 0;
  double read_ns_per_byte = 0;
  double write_ns_per_byte = 0;

  bool any() const {
    return read_ns_per_access > 0 || write_ns_per_access > 0 || read_ns_per_byte > 0 ||
           write_ns_per_byte > 0;
  }
  uint64_t read_ns(uint64_t bytes) const {
    return static_cast<uint64_t>(read_ns_per_access + read_ns_per_byte * double(bytes));
  }
  uint64_t write_ns(uint64_t bytes) const {
    return static_cast<uint64_t>(write_ns_per_access + write_ns_per_byte * double(bytes));
  }
};

struct TierConfig {
  enum class Backing { Volatile, MappedFile, Directory };

  std::string name;
  uint64_t capacity = 0;          // quota in bytes (S_j)
  Backing backing = Backing::Volatile;
  std::filesystem::path path;    // arena file or blob directory
  SyntheticLatency latency;
};

// One line: name,capacity_bytes,backing[,ns_per_access[,ns_per_byte]]
// backing := volatile | file:<path> | dir:<path>
TierConfig parse_tier_line(std::string_view line);
std::string format_tier_line(const TierConfig& cfg);
std::vector<TierConfig> load_tier_file(const std::filesystem::path& path);
void save_tier_file(const std::filesystem::path& path, const std::vector<TierConfig>& tiers);

struct TierUsage {
  uint64_t used = 0;      // live allocated bytes
  uint64_t capacity = 0;
};

// Monotone counters; snapshot-readable while the tier is in use.
struct TierCounters {
  std::atomic<uint64_t> bytes_read{0};
  std::atomic<uint64_t> bytes_written{0};
  std::atomic<uint64_t> serde_events{0};  // block tiers only
  std::atomic<uint64_t> allocations{0};
};

class TierAllocator {
 public:
  virtual ~TierAllocator() = default;

  const std::string& name() const { return name_; }
  TierIndex index() const { return index_; }
  uint64_t capacity() const { return capacity_; }
  const SyntheticLatency& latency() const { return latency_; }
  virtual bool block_device() const { return false; }

  // Bump allocation against the quota. Regions start zeroed.
  Handle alloc(uint64_t size);
  std::optional<Handle> try_alloc(uint64_t size);
  // Accounting-only: marks a region dead and returns its quota. The offsets
  // are never reused.
  void release(Handle h, uint64_t size);

  void write(Handle h, uint64_t offset, std::span<const std::byte> data);
  void read(Handle h, uint64_t offset, std::span<std::byte> out);

  template <typename T>
  void set_val(Handle h, uint64_t offset, T v) {
    std::byte buf[8];
    store_le_t<T>(buf, v);
    write(h, offset, std::span<const std::byte>(buf, sizeof(T)));
  }
  template <typename T>
  T get_val(Handle h, uint64_t offset) {
    std::byte buf[8];
    read(h, offset, std::span<std::byte>(buf, sizeof(T)));
    return load_le_t<T>(buf);
  }

  // Length-prefixed buffers (8-byte LE length + payload).
  Handle create_buffer(std::span<const std::byte> payload);
  std::vector<std::byte> retrieve_buffer(Handle h);
  uint64_t buffer_size(Handle h);  // payload length

  virtual void sync() {}

  TierUsage usage() const;
  const TierCounters& counters() const { return counters_; }

 protected:
  TierAllocator(std::string name, TierIndex index, uint64_t capacity, SyntheticLatency latency);

  // Backend hooks. Offsets are tier-relative; bounds are pre-checked.
  virtual void on_alloc(uint64_t offset, uint64_t size) = 0;
  virtual void write_raw(uint64_t offset, std::span<const std::byte> data) = 0;
  virtual void read_raw(uint64_t offset, std::span<std::byte> out) = 0;
  virtual void persist_cursor(uint64_t cursor, uint64_t live) { (void)cursor; (void)live; }
  // Whole-frame read for backends that know the region size (one I/O on the
  // blob store); nullopt falls back to prefix-then-payload reads.
  virtual std::optional<std::vector<std::byte>> read_framed(uint64_t offset) {
    (void)offset;
    return std::nullopt;
  }

  void restore_accounting(uint64_t cursor, uint64_t live);
  uint64_t cursor_snapshot() const;
  void check_bounds(Handle h, uint64_t offset, uint64_t len) const;

  std::string name_;
  TierIndex index_;
  uint64_t capacity_;
  SyntheticLatency latency_;
  TierCounters counters_;

  mutable std::mutex alloc_mu_;
  uint64_t reserved_ = 0;            // next fresh offset; tier 0 starts at 8 (null guard)
  std::atomic<uint64_t> cursor_{0};  // published high-water for bounds checks
  uint64_t live_ = 0;                // quota accounting
};

// Arena file header, 32 bytes little-endian:
//   0  magic "TIER"
//   4  format version u32
//   8  capacity u64
//  16  allocation cursor u64
//  24  live-byte count u64
inline constexpr uint32_t kArenaVersion = 1;
inline constexpr uint64_t kArenaHeaderSize = 32;

std::unique_ptr<TierAllocator> open_tier(const TierConfig& cfg, TierIndex index);

// The tier roster for one store: index order is id order.
class TierSet {
 public:
  TierSet() = default;
  static TierSet open(const std::vector<TierConfig>& configs);

  TierAllocator& tier(TierIndex idx);
  TierAllocator& tier(std::string_view name);
  const TierAllocator& tier(TierIndex idx) const;
  std::optional<TierIndex> find(std::string_view name) const;
  size_t count() const { return tiers_.size(); }
  std::vector<std::string> names() const;
  void sync_all();

 private:
  std::vector<std::unique_ptr<TierAllocator>> tiers_;
};

}  // namespace strata
