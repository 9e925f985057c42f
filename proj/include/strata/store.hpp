#pragma once
// Durable objects: schema-typed records whose fixed fields live inline on the
// record tier and whose variable fields live in per-payload buffers on the
// tier chosen by tag preference, with capacity-driven fallback, eviction of
// multi-tag residents, and promotion/demotion.

#include <array>
#include <cstdint>
#include <list>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "strata/schema.hpp"
#include "strata/tiers.hpp"

namespace strata {

using Value =
    std::variant<int16_t, int32_t, int64_t, float, double, std::vector<std::byte>, std::string>;

FieldKind kind_of(const Value& v);
uint64_t payload_size(const Value& v);  // bytes of a variable value (0 for scalars)

struct ObjectRef {
  Handle root;
  friend bool operator==(ObjectRef, ObjectRef) = default;
};

struct Demotion {
  Handle root;
  std::string field;
  std::string from;
  std::string to;
  uint64_t bytes;
};

// Callback for profiling instrumentation; see profiling.hpp.
struct AccessRecorder {
  virtual ~AccessRecorder() = default;
  virtual void record(std::string_view field, std::string_view device, uint64_t bytes,
                      uint64_t ns) = 0;
};

struct TierMetricsRow {
  std::string tier;
  uint64_t bytes_read;
  uint64_t bytes_written;
  uint64_t serde_events;
  uint64_t used;
  uint64_t capacity;
};

struct StoreMetrics {
  uint64_t bytes_materialized = 0;
  uint64_t serde_events = 0;  // sum over block tiers
  uint64_t demotions = 0;
  std::vector<TierMetricsRow> tiers;

  std::string to_csv() const;  // rows of counter,value
};

// On-disk description of a store: tier configs, schema path, assignment.
struct StoreManifest {
  std::vector<TierConfig> tiers;
  std::filesystem::path schema_path;
  FieldAssignment assignment;

  static StoreManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

class Store {
 public:
  Store(TierSet tiers, ObjectSchema schema, LayoutPlan layout);
  static Store open(const StoreManifest& manifest);

  const ObjectSchema& schema() const { return schema_; }
  const LayoutPlan& layout() const { return layout_; }
  TierSet& tiers() { return tiers_; }
  TierIndex record_tier() const { return record_tier_; }

  ObjectRef create_object();
  // Adopt a root handle from a previous session (the caller persisted it).
  ObjectRef object_at(Handle root) const;

  void set_field(ObjectRef obj, std::string_view field, const Value& v);
  void set_field(ObjectRef obj, size_t field_idx, const Value& v);
  std::optional<Value> get_field(ObjectRef obj, std::string_view field);
  std::optional<Value> get_field(ObjectRef obj, size_t field_idx);

  // Uninstrumented fast paths for hot benchmark loops (still counted in
  // bytes_materialized).
  double get_f64(ObjectRef obj, size_t field_idx);
  void set_f64(ObjectRef obj, size_t field_idx, double v);
  int64_t get_i64(ObjectRef obj, size_t field_idx);
  void set_i64(ObjectRef obj, size_t field_idx, int64_t v);

  // First tier in the field's tag preference list with room for the payload.
  TierIndex place_field(size_t field_idx, uint64_t payload_bytes) const;

  void demote_field(ObjectRef obj, std::string_view field, std::string_view to_tier);
  void promote_field(ObjectRef obj, std::string_view field, std::string_view to_tier);

  // Demotes multi-tag residents of the contended tier (oldest placement
  // first) to their next tag until `needed` bytes fit. Returns the demotions
  // performed; throws insufficient_space if the request still cannot fit.
  std::vector<Demotion> evict_for(size_t field_idx, uint64_t needed);

  void sync();
  StoreMetrics metrics() const;
  uint64_t bytes_materialized() const {
    return bytes_materialized_.load(std::memory_order_relaxed);
  }

  void attach_recorder(AccessRecorder* recorder) { recorder_ = recorder; }

  // Every variable payload must sit on a tier from its tag list.
  bool placements_respect_tags() const;

  // Raw contiguous record region; used by collections.
  Handle alloc_record_region(uint64_t count, TierIndex tier);
  uint64_t record_size() const { return layout_.record_size; }

 private:
  friend class DurableArray;
  friend class DurableMap;

  struct FieldMeta {
    FieldKind kind;
    uint32_t offset;
    std::vector<TierIndex> tags;
  };

  size_t resolve(std::string_view field) const;
  Handle inline_handle(ObjectRef obj, const FieldMeta& f);
  void write_inline_handle(ObjectRef obj, const FieldMeta& f, Handle h);
  // Move one payload to `to`; caller holds the object's stripe.
  void move_payload_locked(ObjectRef obj, size_t field_idx, TierIndex to);
  std::vector<Demotion> evict_locked(size_t field_idx, uint64_t needed, size_t held_stripe);
  void registry_touch(ObjectRef obj, size_t field_idx);

  static constexpr size_t kStripes = 64;
  size_t stripe_of(ObjectRef obj) const { return fnv1a_u64(obj.root.raw()) % kStripes; }

  TierSet tiers_;
  ObjectSchema schema_;
  LayoutPlan layout_;
  std::vector<FieldMeta> fields_;
  TierIndex record_tier_;

  std::atomic<uint64_t> bytes_materialized_{0};
  std::atomic<uint64_t> demotions_{0};
  AccessRecorder* recorder_ = nullptr;

  mutable std::array<std::shared_mutex, kStripes> stripes_;

  // Placement registry: order of variable-payload placements, oldest first;
  // session-scoped (eviction policy state, not durable data).
  struct PlacementKey {
    uint64_t root;
    uint32_t field;
    bool operator==(const PlacementKey&) const = default;
  };
  struct PlacementKeyHash {
    size_t operator()(const PlacementKey& k) const {
      return fnv1a_u64(k.root ^ (uint64_t(k.field) << 1));
    }
  };
  mutable std::mutex registry_mu_;
  std::list<PlacementKey> placement_order_;
  std::unordered_map<PlacementKey, std::list<PlacementKey>::iterator, PlacementKeyHash>
      placement_index_;
};

}  // namespace strata
