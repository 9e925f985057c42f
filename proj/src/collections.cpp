#include "strata/collections.hpp"

namespace strata {

// ---------------------------------------------------------------------------
// DurableArray.

DurableArray DurableArray::create(Store& store, uint64_t n, TierIndex tier) {
  Handle root = store.alloc_record_region(n, tier);
  return DurableArray(store, root, n);
}

DurableArray DurableArray::open(Store& store, Handle root, uint64_t n) {
  if (root.null()) fail(Errc::bad_argument, "null array root");
  return DurableArray(store, root, n);
}

ObjectRef DurableArray::element(uint64_t i) const {
  if (i >= n_)
    fail(Errc::out_of_bounds,
         "array index " + std::to_string(i) + " >= length " + std::to_string(n_));
  uint64_t record = std::max<uint64_t>(store_->record_size(), 1);
  return ObjectRef{Handle::pack(root_.tier(), root_.offset() + i * record)};
}

void DurableArray::set(uint64_t i, std::string_view field, const Value& v) {
  store_->set_field(element(i), field, v);
}

std::optional<Value> DurableArray::get(uint64_t i, std::string_view field) {
  return store_->get_field(element(i), field);
}

// ---------------------------------------------------------------------------
// DurableMap. Layout (all on one tier):
//   root:    [bucket_count u64][size u64][bucket array handle u64]
//   buckets: bucket_count x entry handle u64
//   entry:   [key buffer handle u64][value u64][next entry handle u64]

static constexpr uint64_t kRootSize = 24;
static constexpr uint64_t kEntrySize = 24;
static constexpr double kMaxLoad = 0.75;

DurableMap DurableMap::create(Store& store, TierIndex tier, uint64_t initial_buckets) {
  if (initial_buckets < 2 || (initial_buckets & (initial_buckets - 1)) != 0)
    fail(Errc::bad_argument, "bucket count must be a power of two >= 2");
  TierAllocator& t = store.tiers().tier(tier);
  Handle root = t.alloc(kRootSize);
  Handle array = t.alloc(initial_buckets * 8);  // zeroed: all chains empty
  t.set_val<uint64_t>(root, 0, initial_buckets);
  t.set_val<uint64_t>(root, 8, 0);
  t.set_val<uint64_t>(root, 16, array.raw());
  return DurableMap(store, tier, root);
}

DurableMap DurableMap::open(Store& store, Handle root) {
  if (root.null()) fail(Errc::bad_argument, "null map root");
  DurableMap m(store, root.tier(), root);
  uint64_t buckets = m.buckets();
  if (buckets < 2 || (buckets & (buckets - 1)) != 0)
    fail(Errc::corrupt_data, "map root has invalid bucket count");
  return m;
}

uint64_t DurableMap::buckets() const { return t().get_val<uint64_t>(root_, 0); }
uint64_t DurableMap::size() const { return t().get_val<uint64_t>(root_, 8); }
Handle DurableMap::bucket_array() const {
  return Handle::from_raw(t().get_val<uint64_t>(root_, 16));
}
void DurableMap::set_size(uint64_t n) { t().set_val<uint64_t>(root_, 8, n); }
uint64_t DurableMap::bucket_count() const { return buckets(); }
double DurableMap::load_factor() const {
  return static_cast<double>(size()) / static_cast<double>(buckets());
}

Handle DurableMap::bucket_head(Handle array, uint64_t b) const {
  return Handle::from_raw(t().get_val<uint64_t>(array, b * 8));
}

void DurableMap::set_bucket_head(Handle array, uint64_t b, Handle h) {
  t().set_val<uint64_t>(array, b * 8, h.raw());
}

DurableMap::Entry DurableMap::read_entry(Handle e) const {
  Entry entry;
  entry.key = Handle::from_raw(t().get_val<uint64_t>(e, 0));
  entry.value = t().get_val<uint64_t>(e, 8);
  entry.next = Handle::from_raw(t().get_val<uint64_t>(e, 16));
  return entry;
}

bool DurableMap::key_matches(Handle key_buf, std::span<const std::byte> key) const {
  if (t().buffer_size(key_buf) != key.size()) return false;
  std::vector<std::byte> stored = t().retrieve_buffer(key_buf);
  return std::equal(stored.begin(), stored.end(), key.begin(), key.end());
}

void DurableMap::put(std::span<const std::byte> key, ObjectRef value) {
  uint64_t nb = buckets();
  Handle array = bucket_array();
  uint64_t b = fnv1a(key.data(), key.size()) & (nb - 1);

  for (Handle e = bucket_head(array, b); !e.null();) {
    Entry entry = read_entry(e);
    if (key_matches(entry.key, key)) {
      t().set_val<uint64_t>(e, 8, value.root.raw());
      return;
    }
    e = entry.next;
  }

  Handle key_buf = t().create_buffer(key);
  Handle e = t().alloc(kEntrySize);
  t().set_val<uint64_t>(e, 0, key_buf.raw());
  t().set_val<uint64_t>(e, 8, value.root.raw());
  t().set_val<uint64_t>(e, 16, bucket_head(array, b).raw());
  set_bucket_head(array, b, e);
  uint64_t n = size() + 1;
  set_size(n);
  if (static_cast<double>(n) > kMaxLoad * static_cast<double>(nb)) grow();
}

std::optional<ObjectRef> DurableMap::get(std::span<const std::byte> key) {
  Handle array = bucket_array();
  uint64_t b = fnv1a(key.data(), key.size()) & (buckets() - 1);
  for (Handle e = bucket_head(array, b); !e.null();) {
    Entry entry = read_entry(e);
    if (key_matches(entry.key, key)) return ObjectRef{Handle::from_raw(entry.value)};
    e = entry.next;
  }
  return std::nullopt;
}

bool DurableMap::erase(std::span<const std::byte> key) {
  Handle array = bucket_array();
  uint64_t b = fnv1a(key.data(), key.size()) & (buckets() - 1);
  Handle prev;
  for (Handle e = bucket_head(array, b); !e.null();) {
    Entry entry = read_entry(e);
    if (key_matches(entry.key, key)) {
      if (prev.null()) {
        set_bucket_head(array, b, entry.next);
      } else {
        t().set_val<uint64_t>(prev, 16, entry.next.raw());
      }
      uint64_t key_len = t().buffer_size(entry.key);
      t().release(entry.key, 8 + key_len);
      t().release(e, kEntrySize);
      set_size(size() - 1);
      return true;
    }
    prev = e;
    e = entry.next;
  }
  return false;
}

void DurableMap::grow() {
  uint64_t old_nb = buckets();
  uint64_t new_nb = old_nb * 2;
  Handle old_array = bucket_array();
  Handle new_array = t().alloc(new_nb * 8);

  for (uint64_t b = 0; b < old_nb; b++) {
    Handle e = bucket_head(old_array, b);
    while (!e.null()) {
      Entry entry = read_entry(e);
      std::vector<std::byte> key = t().retrieve_buffer(entry.key);
      uint64_t nb2 = fnv1a(key.data(), key.size()) & (new_nb - 1);
      t().set_val<uint64_t>(e, 16, bucket_head(new_array, nb2).raw());
      set_bucket_head(new_array, nb2, e);
      e = entry.next;
    }
  }

  t().set_val<uint64_t>(root_, 0, new_nb);
  t().set_val<uint64_t>(root_, 16, new_array.raw());
  t().release(old_array, old_nb * 8);
}

}  // namespace strata
