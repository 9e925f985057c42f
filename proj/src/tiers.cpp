#include "strata/tiers.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_map>

namespace strata {

namespace fs = std::filesystem;

// Tier-0 arenas skip their first bytes so no live handle encodes to 0 (null).
static constexpr uint64_t kNullGuard = 8;

// ---------------------------------------------------------------------------
// TierAllocator base: quota bookkeeping, buffers, latency injection.

TierAllocator::TierAllocator(std::string name, TierIndex index, uint64_t capacity,
                             SyntheticLatency latency)
    : name_(std::move(name)), index_(index), capacity_(capacity), latency_(latency) {
  if (capacity_ == 0) fail(Errc::bad_argument, "tier '" + name_ + "': capacity must be > 0");
  if (capacity_ > kMaxTierOffset - kNullGuard)
    fail(Errc::out_of_bounds,
         "tier '" + name_ + "': capacity exceeds the 56-bit handle offset range");
  reserved_ = index_ == 0 ? kNullGuard : 0;
  cursor_.store(reserved_, std::memory_order_relaxed);
}

void TierAllocator::restore_accounting(uint64_t cursor, uint64_t live) {
  std::lock_guard lk(alloc_mu_);
  reserved_ = cursor;
  cursor_.store(cursor, std::memory_order_release);
  live_ = live;
}

uint64_t TierAllocator::cursor_snapshot() const {
  return cursor_.load(std::memory_order_acquire);
}

std::optional<Handle> TierAllocator::try_alloc(uint64_t size) {
  if (size == 0) fail(Errc::bad_argument, "alloc of zero bytes");
  uint64_t offset;
  {
    std::lock_guard lk(alloc_mu_);
    if (live_ + size > capacity_) return std::nullopt;
    if (reserved_ + size > kMaxTierOffset) return std::nullopt;  // address space, not quota
    offset = reserved_;
    reserved_ += size;
    live_ += size;
    persist_cursor(reserved_, live_);
  }
  // Back the region first, then publish it for bounds checks; a reader that
  // passes check_bounds always finds storage behind the offset.
  on_alloc(offset, size);
  counters_.allocations.fetch_add(1, std::memory_order_relaxed);
  uint64_t end = offset + size;
  uint64_t seen = cursor_.load(std::memory_order_relaxed);
  while (seen < end && !cursor_.compare_exchange_weak(seen, end, std::memory_order_release)) {
  }
  return Handle::pack(index_, offset);
}

Handle TierAllocator::alloc(uint64_t size) {
  auto h = try_alloc(size);
  if (!h)
    fail(Errc::capacity_exhausted, "tier '" + name_ + "': cannot allocate " +
                                       std::to_string(size) + " bytes (used " +
                                       std::to_string(usage().used) + "/" +
                                       std::to_string(capacity_) + ")");
  return *h;
}

void TierAllocator::release(Handle h, uint64_t size) {
  if (h.tier() != index_) fail(Errc::bad_argument, "release: handle belongs to another tier");
  std::lock_guard lk(alloc_mu_);
  if (size > live_) fail(Errc::bad_argument, "release: more bytes than live");
  live_ -= size;
  persist_cursor(reserved_, live_);
}

void TierAllocator::check_bounds(Handle h, uint64_t offset, uint64_t len) const {
  if (h.null()) fail(Errc::out_of_bounds, "null handle");
  if (h.tier() != index_)
    fail(Errc::bad_argument, "handle tier " + std::to_string(h.tier()) +
                                 " accessed through tier '" + name_ + "'");
  uint64_t cur = cursor_snapshot();
  if (h.offset() + offset + len > cur || h.offset() + offset < h.offset())
    fail(Errc::out_of_bounds, "tier '" + name_ + "': access beyond allocated space");
}

void TierAllocator::write(Handle h, uint64_t offset, std::span<const std::byte> data) {
  uint64_t t0 = now_ns();
  check_bounds(h, offset, data.size());
  write_raw(h.offset() + offset, data);
  counters_.bytes_written.fetch_add(data.size(), std::memory_order_relaxed);
  if (latency_.any()) spin_until(t0, latency_.write_ns(data.size()));
}

void TierAllocator::read(Handle h, uint64_t offset, std::span<std::byte> out) {
  uint64_t t0 = now_ns();
  check_bounds(h, offset, out.size());
  read_raw(h.offset() + offset, out);
  counters_.bytes_read.fetch_add(out.size(), std::memory_order_relaxed);
  if (latency_.any()) spin_until(t0, latency_.read_ns(out.size()));
}

Handle TierAllocator::create_buffer(std::span<const std::byte> payload) {
  uint64_t t0 = now_ns();
  uint64_t total = 8 + payload.size();
  Handle h = alloc(total);
  std::vector<std::byte> framed(total);
  store_le(framed.data(), payload.size(), 8);
  if (!payload.empty()) std::memcpy(framed.data() + 8, payload.data(), payload.size());
  write_raw(h.offset(), framed);
  counters_.bytes_written.fetch_add(total, std::memory_order_relaxed);
  if (block_device()) counters_.serde_events.fetch_add(1, std::memory_order_relaxed);
  if (latency_.any()) spin_until(t0, latency_.write_ns(total));
  return h;
}

std::vector<std::byte> TierAllocator::retrieve_buffer(Handle h) {
  uint64_t t0 = now_ns();
  check_bounds(h, 0, 8);
  uint64_t len;
  std::vector<std::byte> payload;
  if (auto framed = read_framed(h.offset())) {
    // One backend read covering prefix and payload.
    len = load_le(framed->data(), 8);
    if (8 + len > framed->size())
      fail(Errc::corrupt_data, "tier '" + name_ + "': buffer length prefix out of range");
    payload.assign(framed->begin() + 8, framed->begin() + 8 + len);
  } else {
    std::byte prefix[8];
    read_raw(h.offset(), prefix);
    len = load_le(prefix, 8);
    uint64_t cur = cursor_snapshot();
    if (len > cur || h.offset() + 8 + len > cur)
      fail(Errc::corrupt_data, "tier '" + name_ + "': buffer length prefix out of range");
    payload.resize(len);
    if (len > 0) read_raw(h.offset() + 8, payload);
  }
  counters_.bytes_read.fetch_add(8 + len, std::memory_order_relaxed);
  if (block_device()) counters_.serde_events.fetch_add(1, std::memory_order_relaxed);
  if (latency_.any()) spin_until(t0, latency_.read_ns(8 + len));
  return payload;
}

uint64_t TierAllocator::buffer_size(Handle h) {
  check_bounds(h, 0, 8);
  std::byte prefix[8];
  read_raw(h.offset(), prefix);
  counters_.bytes_read.fetch_add(8, std::memory_order_relaxed);
  uint64_t len = load_le(prefix, 8);
  uint64_t cur = cursor_snapshot();
  if (len > cur || h.offset() + 8 + len > cur)
    fail(Errc::corrupt_data, "tier '" + name_ + "': buffer length prefix out of range");
  return len;
}

TierUsage TierAllocator::usage() const {
  std::lock_guard lk(alloc_mu_);
  return {live_, capacity_};
}

// ---------------------------------------------------------------------------
// Volatile arena.

namespace {

class VolatileTier final : public TierAllocator {
 public:
  VolatileTier(const TierConfig& cfg, TierIndex index)
      : TierAllocator(cfg.name, index, cfg.capacity, cfg.latency) {}

 private:
  void on_alloc(uint64_t offset, uint64_t size) override {
    std::unique_lock lk(arena_mu_);
    if (offset + size > arena_.size()) {
      size_t grown = std::max<size_t>(offset + size, arena_.size() + arena_.size() / 2);
      arena_.resize(std::max<size_t>(grown, 4096));
    }
  }

  void write_raw(uint64_t offset, std::span<const std::byte> data) override {
    std::shared_lock lk(arena_mu_);
    std::memcpy(arena_.data() + offset, data.data(), data.size());
  }

  void read_raw(uint64_t offset, std::span<std::byte> out) override {
    std::shared_lock lk(arena_mu_);
    std::memcpy(out.data(), arena_.data() + offset, out.size());
  }

  std::shared_mutex arena_mu_;
  std::vector<std::byte> arena_;
};

// ---------------------------------------------------------------------------
// Memory-mapped file arena (the pmem emulation). Byte-granular access, no
// serde accounting. The 32-byte header keeps cursor and live bytes so a
// reopen restores exact usage.

class MappedTier final : public TierAllocator {
 public:
  MappedTier(const TierConfig& cfg, TierIndex index)
      : TierAllocator(cfg.name, index, cfg.capacity, cfg.latency) {
    bool existing = fs::exists(cfg.path) && fs::file_size(cfg.path) >= kArenaHeaderSize;
    fd_ = ::open(cfg.path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0)
      fail(Errc::io_error, "tier '" + name_ + "': cannot open " + cfg.path.string() + ": " +
                               std::strerror(errno));
    if (existing) {
      open_existing();
    } else {
      init_fresh();
    }
  }

  ~MappedTier() override {
    if (map_ != nullptr) {
      ::msync(map_, map_size_, MS_SYNC);
      ::munmap(map_, map_size_);
    }
    if (fd_ >= 0) ::close(fd_);
  }

  void sync() override {
    std::shared_lock lk(arena_mu_);
    if (::msync(map_, map_size_, MS_SYNC) != 0)
      fail(Errc::io_error, "tier '" + name_ + "': msync failed: " + std::strerror(errno));
  }

 private:
  void init_fresh() {
    map_to(kArenaHeaderSize + std::min<uint64_t>(capacity_ + kNullGuard, 1 << 20));
    std::memcpy(map_, "TIER", 4);
    store_le(header(4), kArenaVersion, 4);
    store_le(header(8), capacity_, 8);
    store_le(header(16), cursor_, 8);
    store_le(header(24), live_, 8);
  }

  void open_existing() {
    struct stat st{};
    if (fstat(fd_, &st) != 0) fail(Errc::io_error, "fstat: " + std::string(std::strerror(errno)));
    map_to(static_cast<uint64_t>(st.st_size));
    if (std::memcmp(map_, "TIER", 4) != 0)
      fail(Errc::corrupt_data, "tier '" + name_ + "': bad arena magic");
    if (load_le(header(4), 4) != kArenaVersion)
      fail(Errc::corrupt_data, "tier '" + name_ + "': unsupported arena version");
    uint64_t file_capacity = load_le(header(8), 8);
    if (file_capacity != capacity_)
      fail(Errc::capacity_mismatch, "tier '" + name_ + "': arena capacity " +
                                        std::to_string(file_capacity) +
                                        " != configured " + std::to_string(capacity_));
    uint64_t cursor = load_le(header(16), 8);
    uint64_t live = load_le(header(24), 8);
    if (kArenaHeaderSize + cursor > map_size_ || live > capacity_)
      fail(Errc::corrupt_data, "tier '" + name_ + "': arena accounting out of range");
    restore_accounting(cursor, live);
  }

  unsigned char* header(size_t off) { return static_cast<unsigned char*>(map_) + off; }

  void map_to(uint64_t size) {
    if (map_ != nullptr) ::munmap(map_, map_size_);
    map_ = nullptr;
    if (::ftruncate(fd_, static_cast<off_t>(size)) != 0)
      fail(Errc::io_error, "tier '" + name_ + "': ftruncate: " + std::strerror(errno));
    void* p = ::mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd_, 0);
    if (p == MAP_FAILED)
      fail(Errc::io_error, "tier '" + name_ + "': mmap: " + std::strerror(errno));
    map_ = p;
    map_size_ = size;
  }

  void on_alloc(uint64_t offset, uint64_t size) override {
    std::unique_lock lk(arena_mu_);
    uint64_t need = kArenaHeaderSize + offset + size;
    if (need > map_size_)
      map_to(std::max<uint64_t>(need, map_size_ + map_size_ / 2));
  }

  void persist_cursor(uint64_t cursor, uint64_t live) override {
    // Called under alloc_mu_ (one writer), but the map can move under us.
    std::shared_lock lk(arena_mu_);
    store_le(header(16), cursor, 8);
    store_le(header(24), live, 8);
  }

  void write_raw(uint64_t offset, std::span<const std::byte> data) override {
    std::shared_lock lk(arena_mu_);
    std::memcpy(static_cast<std::byte*>(map_) + kArenaHeaderSize + offset, data.data(),
                data.size());
  }

  void read_raw(uint64_t offset, std::span<std::byte> out) override {
    std::shared_lock lk(arena_mu_);
    std::memcpy(out.data(), static_cast<std::byte*>(map_) + kArenaHeaderSize + offset,
                out.size());
  }

  int fd_ = -1;
  void* map_ = nullptr;
  uint64_t map_size_ = 0;
  std::shared_mutex arena_mu_;
};

// ---------------------------------------------------------------------------
// Directory-of-blobs tier (disk). One file per allocation, named by offset,
// plus an append-only index.log of "offset,size" lines. Buffer traffic here
// is explicit (de)serialization and is counted.

class DiskTier final : public TierAllocator {
 public:
  DiskTier(const TierConfig& cfg, TierIndex index)
      : TierAllocator(cfg.name, index, cfg.capacity, cfg.latency), dir_(cfg.path) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(Errc::io_error, "tier '" + name_ + "': cannot create " + dir_.string());
    fs::path index_path = dir_ / "index.log";
    if (fs::exists(index_path)) replay_index(index_path);
    index_fd_ = ::open(index_path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (index_fd_ < 0)
      fail(Errc::io_error, "tier '" + name_ + "': cannot open index.log: " +
                               std::strerror(errno));
  }

  ~DiskTier() override {
    close_cached_fds();
    if (index_fd_ >= 0) ::close(index_fd_);
  }

  bool block_device() const override { return true; }

  void sync() override {
    std::lock_guard lk(fd_mu_);
    if (index_fd_ >= 0 && ::fsync(index_fd_) != 0)
      fail(Errc::io_error, "tier '" + name_ + "': fsync index: " + std::strerror(errno));
    for (auto& [off, fd] : fd_cache_)
      if (::fsync(fd) != 0)
        fail(Errc::io_error, "tier '" + name_ + "': fsync blob: " + std::strerror(errno));
  }

 private:
  void replay_index(const fs::path& index_path) {
    std::ifstream in(index_path);
    if (!in) fail(Errc::io_error, "tier '" + name_ + "': cannot read index.log");
    std::string line;
    uint64_t cursor = index_ == 0 ? kNullGuard : 0;
    uint64_t live = 0;
    int lineno = 0;
    while (std::getline(in, line)) {
      lineno++;
      if (line.empty()) continue;
      size_t comma = line.find(',');
      uint64_t off = 0, size = 0;
      auto r1 = std::from_chars(line.data(), line.data() + std::min(comma, line.size()), off);
      bool ok = comma != std::string::npos && r1.ec == std::errc();
      if (ok) {
        auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), size);
        ok = r2.ec == std::errc() && size > 0;
      }
      if (!ok)
        fail(Errc::corrupt_data,
             "tier '" + name_ + "': index.log line " + std::to_string(lineno) + " malformed");
      blobs_[off] = size;
      cursor = std::max(cursor, off + size);
      live += size;
    }
    restore_accounting(cursor, live);
  }

  fs::path blob_path(uint64_t offset) const { return dir_ / (std::to_string(offset) + ".blob"); }

  void on_alloc(uint64_t offset, uint64_t size) override {
    int fd = ::open(blob_path(offset).c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
    if (fd < 0)
      fail(Errc::io_error, "tier '" + name_ + "': cannot create blob: " + std::strerror(errno));
    if (::ftruncate(fd, static_cast<off_t>(size)) != 0) {
      ::close(fd);
      fail(Errc::io_error, "tier '" + name_ + "': ftruncate blob: " + std::strerror(errno));
    }
    {
      std::unique_lock lk(blob_mu_);
      blobs_[offset] = size;
    }
    cache_fd(offset, fd);
    std::string line = std::to_string(offset) + "," + std::to_string(size) + "\n";
    if (::write(index_fd_, line.data(), line.size()) != static_cast<ssize_t>(line.size()))
      fail(Errc::io_error, "tier '" + name_ + "': index append failed");
  }

  // Locate the blob containing [offset, offset+len).
  std::pair<uint64_t, uint64_t> find_blob(uint64_t offset, uint64_t len) {
    std::shared_lock lk(blob_mu_);
    auto it = blobs_.upper_bound(offset);
    if (it == blobs_.begin()) fail(Errc::out_of_bounds, "tier '" + name_ + "': no blob at offset");
    --it;
    if (offset + len > it->first + it->second)
      fail(Errc::out_of_bounds, "tier '" + name_ + "': access crosses blob bounds");
    return {it->first, it->second};
  }

  int fd_for(uint64_t blob_offset) {
    {
      std::lock_guard lk(fd_mu_);
      auto it = fd_cache_.find(blob_offset);
      if (it != fd_cache_.end()) return it->second;
    }
    int fd = ::open(blob_path(blob_offset).c_str(), O_RDWR, 0644);
    if (fd < 0)
      fail(Errc::io_error, "tier '" + name_ + "': cannot open blob " +
                               std::to_string(blob_offset) + ": " + std::strerror(errno));
    cache_fd(blob_offset, fd);
    return fd;
  }

  void cache_fd(uint64_t blob_offset, int fd) {
    std::lock_guard lk(fd_mu_);
    if (fd_cache_.size() >= 512) {
      for (auto& [o, f] : fd_cache_) ::close(f);
      fd_cache_.clear();
    }
    auto [it, inserted] = fd_cache_.emplace(blob_offset, fd);
    if (!inserted) {
      ::close(it->second);
      it->second = fd;
    }
  }

  void close_cached_fds() {
    std::lock_guard lk(fd_mu_);
    for (auto& [o, f] : fd_cache_) ::close(f);
    fd_cache_.clear();
  }

  std::optional<std::vector<std::byte>> read_framed(uint64_t offset) override {
    uint64_t size = 0;
    {
      std::shared_lock lk(blob_mu_);
      auto it = blobs_.find(offset);
      if (it == blobs_.end() || it->second < 8) return std::nullopt;
      size = it->second;
    }
    std::vector<std::byte> buf(size);
    int fd = fd_for(offset);
    size_t done = 0;
    while (done < size) {
      ssize_t n = ::pread(fd, buf.data() + done, size - done, static_cast<off_t>(done));
      if (n < 0) fail(Errc::io_error, "tier '" + name_ + "': pread: " + std::strerror(errno));
      if (n == 0) fail(Errc::corrupt_data, "tier '" + name_ + "': blob shorter than indexed");
      done += static_cast<size_t>(n);
    }
    return buf;
  }

  void write_raw(uint64_t offset, std::span<const std::byte> data) override {
    auto [base, size] = find_blob(offset, data.size());
    int fd = fd_for(base);
    size_t done = 0;
    while (done < data.size()) {
      ssize_t n = ::pwrite(fd, data.data() + done, data.size() - done,
                           static_cast<off_t>(offset - base + done));
      if (n <= 0) fail(Errc::io_error, "tier '" + name_ + "': pwrite: " + std::strerror(errno));
      done += static_cast<size_t>(n);
    }
  }

  void read_raw(uint64_t offset, std::span<std::byte> out) override {
    auto [base, size] = find_blob(offset, out.size());
    int fd = fd_for(base);
    size_t done = 0;
    while (done < out.size()) {
      ssize_t n = ::pread(fd, out.data() + done, out.size() - done,
                          static_cast<off_t>(offset - base + done));
      if (n < 0) fail(Errc::io_error, "tier '" + name_ + "': pread: " + std::strerror(errno));
      if (n == 0) fail(Errc::corrupt_data, "tier '" + name_ + "': blob shorter than indexed");
      done += static_cast<size_t>(n);
    }
  }

  fs::path dir_;
  int index_fd_ = -1;
  std::shared_mutex blob_mu_;
  std::map<uint64_t, uint64_t> blobs_;  // base offset -> size
  std::mutex fd_mu_;
  std::unordered_map<uint64_t, int> fd_cache_;
};

}  // namespace

std::unique_ptr<TierAllocator> open_tier(const TierConfig& cfg, TierIndex index) {
  switch (cfg.backing) {
    case TierConfig::Backing::Volatile: return std::make_unique<VolatileTier>(cfg, index);
    case TierConfig::Backing::MappedFile: return std::make_unique<MappedTier>(cfg, index);
    case TierConfig::Backing::Directory: return std::make_unique<DiskTier>(cfg, index);
  }
  fail(Errc::bad_argument, "unknown tier backing");
}

// ---------------------------------------------------------------------------
// Tier config lines.

TierConfig parse_tier_line(std::string_view line) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= line.size()) {
    size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) comma = line.size();
    parts.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (parts.size() < 3)
    fail(Errc::syntax_error, "tier line needs name,capacity,backing: '" + std::string(line) + "'");

  TierConfig cfg;
  cfg.name = parts[0];
  if (cfg.name.empty()) fail(Errc::syntax_error, "tier line: empty name");

  std::string cap = parts[1];
  uint64_t mult = 1;
  if (!cap.empty() && (cap.back() == 'K' || cap.back() == 'M' || cap.back() == 'G')) {
    mult = cap.back() == 'K' ? (1ULL << 10) : cap.back() == 'M' ? (1ULL << 20) : (1ULL << 30);
    cap.pop_back();
  }
  uint64_t value = 0;
  auto r = std::from_chars(cap.data(), cap.data() + cap.size(), value);
  if (r.ec != std::errc() || r.ptr != cap.data() + cap.size())
    fail(Errc::syntax_error, "tier line: bad capacity '" + parts[1] + "'");
  cfg.capacity = value * mult;

  const std::string& backing = parts[2];
  if (backing == "volatile") {
    cfg.backing = TierConfig::Backing::Volatile;
  } else if (backing.rfind("file:", 0) == 0) {
    cfg.backing = TierConfig::Backing::MappedFile;
    cfg.path = backing.substr(5);
  } else if (backing.rfind("dir:", 0) == 0) {
    cfg.backing = TierConfig::Backing::Directory;
    cfg.path = backing.substr(4);
  } else {
    fail(Errc::syntax_error, "tier line: backing must be volatile|file:<path>|dir:<path>");
  }

  auto parse_double = [&](const std::string& s, const char* what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || v < 0)
      fail(Errc::syntax_error, std::string("tier line: bad ") + what + " '" + s + "'");
    return v;
  };
  if (parts.size() >= 4 && !parts[3].empty()) {
    double ns = parse_double(parts[3], "ns_per_access");
    cfg.latency.read_ns_per_access = ns;
    cfg.latency.write_ns_per_access = ns;
  }
  if (parts.size() >= 5 && !parts[4].empty()) {
    double ns = parse_double(parts[4], "ns_per_byte");
    cfg.latency.read_ns_per_byte = ns;
    cfg.latency.write_ns_per_byte = ns;
  }
  if (parts.size() > 5) fail(Errc::syntax_error, "tier line: too many columns");
  return cfg;
}

std::string format_tier_line(const TierConfig& cfg) {
  std::string backing;
  switch (cfg.backing) {
    case TierConfig::Backing::Volatile: backing = "volatile"; break;
    case TierConfig::Backing::MappedFile: backing = "file:" + cfg.path.string(); break;
    case TierConfig::Backing::Directory: backing = "dir:" + cfg.path.string(); break;
  }
  std::string line = cfg.name + "," + std::to_string(cfg.capacity) + "," + backing;
  if (cfg.latency.any()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, ",%g,%g", cfg.latency.read_ns_per_access,
                  cfg.latency.read_ns_per_byte);
    line += buf;
  }
  return line;
}

std::vector<TierConfig> load_tier_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open tier config " + path.string());
  std::vector<TierConfig> tiers;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    tiers.push_back(parse_tier_line(line));
  }
  if (tiers.empty()) fail(Errc::syntax_error, "tier config " + path.string() + " has no tiers");
  return tiers;
}

void save_tier_file(const fs::path& path, const std::vector<TierConfig>& tiers) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write tier config " + path.string());
  for (const TierConfig& cfg : tiers) out << format_tier_line(cfg) << "\n";
}

// ---------------------------------------------------------------------------
// TierSet.

TierSet TierSet::open(const std::vector<TierConfig>& configs) {
  if (configs.empty()) fail(Errc::bad_argument, "no tiers configured");
  if (configs.size() > 256) fail(Errc::bad_argument, "more than 256 tiers");
  TierSet set;
  for (size_t i = 0; i < configs.size(); i++) {
    for (size_t j = 0; j < i; j++)
      if (configs[j].name == configs[i].name)
        fail(Errc::bad_argument, "duplicate tier name '" + configs[i].name + "'");
    set.tiers_.push_back(open_tier(configs[i], static_cast<TierIndex>(i)));
  }
  return set;
}

TierAllocator& TierSet::tier(TierIndex idx) {
  if (idx >= tiers_.size()) fail(Errc::unknown_tier, "tier index " + std::to_string(idx));
  return *tiers_[idx];
}

const TierAllocator& TierSet::tier(TierIndex idx) const {
  if (idx >= tiers_.size()) fail(Errc::unknown_tier, "tier index " + std::to_string(idx));
  return *tiers_[idx];
}

TierAllocator& TierSet::tier(std::string_view name) {
  auto idx = find(name);
  if (!idx) fail(Errc::unknown_tier, "no tier named '" + std::string(name) + "'");
  return *tiers_[*idx];
}

std::optional<TierIndex> TierSet::find(std::string_view name) const {
  for (size_t i = 0; i < tiers_.size(); i++)
    if (tiers_[i]->name() == name) return static_cast<TierIndex>(i);
  return std::nullopt;
}

std::vector<std::string> TierSet::names() const {
  std::vector<std::string> out;
  for (const auto& t : tiers_) out.push_back(t->name());
  return out;
}

void TierSet::sync_all() {
  for (auto& t : tiers_) t->sync();
}

}  // namespace strata
