#pragma once
// Durable collections over the store: a fixed-length array of records and a
// chained hash map, both reachable again after reopen through their root
// handles. Entries link through handle references; keys are length-prefixed
// buffers; hashing is FNV-1a 64 with power-of-two bucket counts.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "strata/store.hpp"

namespace strata {

class DurableArray {
 public:
  // A contiguous region of n records on `tier`, zero-initialized.
  static DurableArray create(Store& store, uint64_t n, TierIndex tier);
  static DurableArray open(Store& store, Handle root, uint64_t n);

  uint64_t size() const { return n_; }
  Handle root() const { return root_; }

  // Element i starts at i * record_size; field semantics are the store's.
  ObjectRef element(uint64_t i) const;
  void set(uint64_t i, std::string_view field, const Value& v);
  std::optional<Value> get(uint64_t i, std::string_view field);

 private:
  DurableArray(Store& store, Handle root, uint64_t n) : store_(&store), root_(root), n_(n) {}
  Store* store_;
  Handle root_;
  uint64_t n_;
};

class DurableMap {
 public:
  static DurableMap create(Store& store, TierIndex tier, uint64_t initial_buckets = 16);
  static DurableMap open(Store& store, Handle root);

  Handle root() const { return root_; }
  uint64_t size() const;

  void put(std::span<const std::byte> key, ObjectRef value);
  std::optional<ObjectRef> get(std::span<const std::byte> key);
  bool erase(std::span<const std::byte> key);

  void put(std::string_view key, ObjectRef value) { put(as_bytes(key), value); }
  std::optional<ObjectRef> get(std::string_view key) { return get(as_bytes(key)); }
  bool erase(std::string_view key) { return erase(as_bytes(key)); }

  double load_factor() const;
  uint64_t bucket_count() const;

 private:
  DurableMap(Store& store, TierIndex tier, Handle root)
      : store_(&store), tier_(tier), root_(root) {}

  static std::span<const std::byte> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
  }

  TierAllocator& t() const { return store_->tiers().tier(tier_); }

  // Root record: bucket_count u64, size u64, buckets handle u64.
  uint64_t buckets() const;
  Handle bucket_array() const;
  void set_size(uint64_t n);
  Handle bucket_head(Handle array, uint64_t b) const;
  void set_bucket_head(Handle array, uint64_t b, Handle h);

  // Entry record: key buffer handle u64, value u64, next entry handle u64.
  struct Entry {
    Handle key;
    uint64_t value;
    Handle next;
  };
  Entry read_entry(Handle e) const;
  bool key_matches(Handle key_buf, std::span<const std::byte> key) const;
  void grow();

  Store* store_;
  TierIndex tier_;
  Handle root_;
};

}  // namespace strata
