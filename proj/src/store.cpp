#include "strata/store.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace strata {

namespace fs = std::filesystem;

FieldKind kind_of(const Value& v) {
  // Variant alternatives are declared in FieldKind order.
  return static_cast<FieldKind>(v.index());
}

uint64_t payload_size(const Value& v) {
  if (const auto* b = std::get_if<std::vector<std::byte>>(&v)) return b->size();
  if (const auto* s = std::get_if<std::string>(&v)) return s->size();
  return 0;
}

static std::span<const std::byte> payload_span(const Value& v) {
  if (const auto* b = std::get_if<std::vector<std::byte>>(&v)) return {b->data(), b->size()};
  const auto& s = std::get<std::string>(v);
  return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
}

std::string StoreMetrics::to_csv() const {
  std::string out = "counter,value\n";
  auto row = [&](const std::string& k, uint64_t v) {
    out += k + "," + std::to_string(v) + "\n";
  };
  row("bytes_materialized", bytes_materialized);
  row("serde_events", serde_events);
  row("demotions", demotions);
  for (const TierMetricsRow& t : tiers) {
    row(t.tier + "_bytes_read", t.bytes_read);
    row(t.tier + "_bytes_written", t.bytes_written);
    row(t.tier + "_serde_events", t.serde_events);
    row(t.tier + "_used", t.used);
    row(t.tier + "_capacity", t.capacity);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest.

StoreManifest StoreManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open manifest " + path.string());
  StoreManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::syntax_error, "manifest line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "schema") {
      fs::path p = value;
      m.schema_path = p.is_absolute() ? p : path.parent_path() / p;
    } else if (key == "assign") {
      size_t colon = value.find(':');
      if (colon == std::string::npos)
        fail(Errc::syntax_error, "manifest line " + std::to_string(lineno) + ": assign needs field:tier");
      m.assignment[value.substr(0, colon)] = value.substr(colon + 1);
    } else if (key == "tier") {
      TierConfig cfg = parse_tier_line(value);
      if (!cfg.path.empty() && cfg.path.is_relative()) cfg.path = path.parent_path() / cfg.path;
      m.tiers.push_back(std::move(cfg));
    } else {
      fail(Errc::syntax_error, "manifest line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (m.tiers.empty()) fail(Errc::syntax_error, "manifest has no tiers");
  if (m.schema_path.empty()) fail(Errc::syntax_error, "manifest has no schema path");
  return m;
}

void StoreManifest::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write manifest " + path.string());
  out << "# strata store manifest\n";
  out << "schema=" << schema_path.string() << "\n";
  for (const auto& [field, tier] : assignment) out << "assign=" << field << ":" << tier << "\n";
  for (const TierConfig& cfg : tiers) out << "tier=" << format_tier_line(cfg) << "\n";
}

// ---------------------------------------------------------------------------
// Store.

Store::Store(TierSet tiers, ObjectSchema schema, LayoutPlan layout)
    : tiers_(std::move(tiers)), schema_(std::move(schema)), layout_(std::move(layout)) {
  if (layout_.entries.size() != schema_.fields.size())
    fail(Errc::bad_argument, "layout does not match schema");
  auto record_idx = tiers_.find(layout_.record_tier);
  if (!record_idx) fail(Errc::unknown_tier, "record tier '" + layout_.record_tier + "' not open");
  record_tier_ = *record_idx;
  for (size_t i = 0; i < schema_.fields.size(); i++) {
    const FieldSpec& f = schema_.fields[i];
    FieldMeta meta;
    meta.kind = f.kind;
    meta.offset = layout_.entries[i].offset;
    for (const std::string& tag : f.tags) {
      auto idx = tiers_.find(tag);
      if (!idx) fail(Errc::unknown_tier, "field '" + f.name + "' tagged with unopened tier '" + tag + "'");
      meta.tags.push_back(*idx);
    }
    fields_.push_back(std::move(meta));
  }
}

Store Store::open(const StoreManifest& manifest) {
  std::ifstream in(manifest.schema_path);
  if (!in) fail(Errc::io_error, "cannot open schema " + manifest.schema_path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> names;
  for (const TierConfig& cfg : manifest.tiers) names.push_back(cfg.name);
  ObjectSchema schema = parse_schema(text, names);
  FieldAssignment assignment =
      manifest.assignment.empty() ? first_tag_assignment(schema) : manifest.assignment;
  LayoutPlan layout = compute_layout(schema, assignment, names);
  return Store(TierSet::open(manifest.tiers), std::move(schema), std::move(layout));
}

size_t Store::resolve(std::string_view field) const {
  int i = schema_.index_of(field);
  if (i < 0) fail(Errc::missing_field, "no field '" + std::string(field) + "'");
  return static_cast<size_t>(i);
}

ObjectRef Store::create_object() {
  uint64_t size = std::max<uint64_t>(layout_.record_size, 1);
  Handle root = tiers_.tier(record_tier_).alloc(size);  // zeroed; variable fields start null
  return {root};
}

ObjectRef Store::object_at(Handle root) const {
  if (root.null()) fail(Errc::bad_argument, "null object root");
  return {root};
}

Handle Store::inline_handle(ObjectRef obj, const FieldMeta& f) {
  return Handle::from_raw(
      tiers_.tier(record_tier_).get_val<uint64_t>(obj.root, f.offset));
}

void Store::write_inline_handle(ObjectRef obj, const FieldMeta& f, Handle h) {
  tiers_.tier(record_tier_).set_val<uint64_t>(obj.root, f.offset, h.raw());
}

TierIndex Store::place_field(size_t field_idx, uint64_t payload_bytes) const {
  const FieldMeta& f = fields_.at(field_idx);
  uint64_t need = 8 + payload_bytes;
  for (TierIndex t : f.tags) {
    TierUsage u = tiers_.tier(t).usage();
    if (u.used + need <= u.capacity) return t;
  }
  fail(Errc::all_tiers_full, "field '" + schema_.fields[field_idx].name +
                                 "': no tagged tier has " + std::to_string(need) + " bytes free");
}

void Store::set_field(ObjectRef obj, std::string_view field, const Value& v) {
  set_field(obj, resolve(field), v);
}

void Store::set_field(ObjectRef obj, size_t field_idx, const Value& v) {
  const FieldMeta& f = fields_.at(field_idx);
  if (kind_of(v) != f.kind)
    fail(Errc::kind_mismatch, "field '" + schema_.fields[field_idx].name + "' expects " +
                                  kind_name(f.kind) + ", got " + kind_name(kind_of(v)));
  uint64_t t0 = recorder_ ? now_ns() : 0;
  size_t stripe = stripe_of(obj);
  std::unique_lock lk(stripes_[stripe]);

  TierIndex touched = record_tier_;
  uint64_t bytes = 0;
  if (!is_variable(f.kind)) {
    TierAllocator& rec = tiers_.tier(record_tier_);
    switch (f.kind) {
      case FieldKind::I16: rec.set_val<int16_t>(obj.root, f.offset, std::get<int16_t>(v)); break;
      case FieldKind::I32: rec.set_val<int32_t>(obj.root, f.offset, std::get<int32_t>(v)); break;
      case FieldKind::I64: rec.set_val<int64_t>(obj.root, f.offset, std::get<int64_t>(v)); break;
      case FieldKind::F32: rec.set_val<float>(obj.root, f.offset, std::get<float>(v)); break;
      case FieldKind::F64: rec.set_val<double>(obj.root, f.offset, std::get<double>(v)); break;
      default: break;
    }
    bytes = fixed_width(f.kind);
  } else {
    std::span<const std::byte> payload = payload_span(v);
    TierIndex target;
    try {
      target = place_field(field_idx, payload.size());
    } catch (const Error& e) {
      if (e.code() != Errc::all_tiers_full || f.tags.size() != 1) throw;
      // A must-place field: push multi-tag residents off the contended tier.
      evict_locked(field_idx, 8 + payload.size(), stripe);
      target = place_field(field_idx, payload.size());
    }
    Handle old = inline_handle(obj, f);
    Handle fresh = tiers_.tier(target).create_buffer(payload);
    write_inline_handle(obj, f, fresh);
    if (!old.null()) {
      uint64_t old_len = tiers_.tier(old.tier()).buffer_size(old);
      tiers_.tier(old.tier()).release(old, 8 + old_len);
    }
    registry_touch(obj, field_idx);
    touched = target;
    bytes = payload.size();
  }

  if (recorder_)
    recorder_->record(schema_.fields[field_idx].name, tiers_.tier(touched).name(), bytes,
                      now_ns() - t0);
}

std::optional<Value> Store::get_field(ObjectRef obj, std::string_view field) {
  return get_field(obj, resolve(field));
}

std::optional<Value> Store::get_field(ObjectRef obj, size_t field_idx) {
  const FieldMeta& f = fields_.at(field_idx);
  uint64_t t0 = recorder_ ? now_ns() : 0;
  size_t stripe = stripe_of(obj);
  std::shared_lock lk(stripes_[stripe]);

  std::optional<Value> result;
  TierIndex touched = record_tier_;
  uint64_t bytes = 0;
  if (!is_variable(f.kind)) {
    TierAllocator& rec = tiers_.tier(record_tier_);
    switch (f.kind) {
      case FieldKind::I16: result = rec.get_val<int16_t>(obj.root, f.offset); break;
      case FieldKind::I32: result = rec.get_val<int32_t>(obj.root, f.offset); break;
      case FieldKind::I64: result = rec.get_val<int64_t>(obj.root, f.offset); break;
      case FieldKind::F32: result = rec.get_val<float>(obj.root, f.offset); break;
      case FieldKind::F64: result = rec.get_val<double>(obj.root, f.offset); break;
      default: break;
    }
    bytes = fixed_width(f.kind);
    bytes_materialized_.fetch_add(bytes, std::memory_order_relaxed);
  } else {
    Handle h = inline_handle(obj, f);
    if (h.null()) return std::nullopt;  // unset, distinguishable from empty
    std::vector<std::byte> payload = tiers_.tier(h.tier()).retrieve_buffer(h);
    bytes = payload.size();
    bytes_materialized_.fetch_add(bytes, std::memory_order_relaxed);
    touched = h.tier();
    if (f.kind == FieldKind::String) {
      result = std::string(reinterpret_cast<const char*>(payload.data()), payload.size());
    } else {
      result = std::move(payload);
    }
  }

  if (recorder_)
    recorder_->record(schema_.fields[field_idx].name, tiers_.tier(touched).name(), bytes,
                      now_ns() - t0);
  return result;
}

double Store::get_f64(ObjectRef obj, size_t field_idx) {
  const FieldMeta& f = fields_[field_idx];
  std::shared_lock lk(stripes_[stripe_of(obj)]);
  bytes_materialized_.fetch_add(8, std::memory_order_relaxed);
  return tiers_.tier(record_tier_).get_val<double>(obj.root, f.offset);
}

void Store::set_f64(ObjectRef obj, size_t field_idx, double v) {
  const FieldMeta& f = fields_[field_idx];
  std::unique_lock lk(stripes_[stripe_of(obj)]);
  tiers_.tier(record_tier_).set_val<double>(obj.root, f.offset, v);
}

int64_t Store::get_i64(ObjectRef obj, size_t field_idx) {
  const FieldMeta& f = fields_[field_idx];
  std::shared_lock lk(stripes_[stripe_of(obj)]);
  bytes_materialized_.fetch_add(8, std::memory_order_relaxed);
  return tiers_.tier(record_tier_).get_val<int64_t>(obj.root, f.offset);
}

void Store::set_i64(ObjectRef obj, size_t field_idx, int64_t v) {
  const FieldMeta& f = fields_[field_idx];
  std::unique_lock lk(stripes_[stripe_of(obj)]);
  tiers_.tier(record_tier_).set_val<int64_t>(obj.root, f.offset, v);
}

void Store::move_payload_locked(ObjectRef obj, size_t field_idx, TierIndex to) {
  const FieldMeta& f = fields_[field_idx];
  Handle old = inline_handle(obj, f);
  if (old.null())
    fail(Errc::bad_argument, "field '" + schema_.fields[field_idx].name + "' is unset");
  if (old.tier() == to) return;
  std::vector<std::byte> payload = tiers_.tier(old.tier()).retrieve_buffer(old);
  Handle fresh = tiers_.tier(to).create_buffer(payload);
  write_inline_handle(obj, f, fresh);
  tiers_.tier(old.tier()).release(old, 8 + payload.size());
  registry_touch(obj, field_idx);
}

static void check_movable(const ObjectSchema& schema, size_t idx, FieldKind kind) {
  if (!is_variable(kind))
    fail(Errc::kind_mismatch, "field '" + schema.fields[idx].name +
                                  "' is fixed-width; inline fields move only with the record");
}

void Store::demote_field(ObjectRef obj, std::string_view field, std::string_view to_tier) {
  size_t idx = resolve(field);
  check_movable(schema_, idx, fields_[idx].kind);
  auto to = tiers_.find(to_tier);
  if (!to) fail(Errc::unknown_tier, "no tier named '" + std::string(to_tier) + "'");
  const auto& tags = fields_[idx].tags;
  if (std::find(tags.begin(), tags.end(), *to) == tags.end())
    fail(Errc::tier_not_tagged,
         "tier '" + std::string(to_tier) + "' is not in the tag list of '" + std::string(field) + "'");
  std::unique_lock lk(stripes_[stripe_of(obj)]);
  move_payload_locked(obj, idx, *to);
}

void Store::promote_field(ObjectRef obj, std::string_view field, std::string_view to_tier) {
  demote_field(obj, field, to_tier);  // same mechanics, opposite direction
}

std::vector<Demotion> Store::evict_for(size_t field_idx, uint64_t needed) {
  return evict_locked(field_idx, needed, kStripes);  // no stripe held by caller
}

std::vector<Demotion> Store::evict_locked(size_t field_idx, uint64_t needed, size_t held_stripe) {
  const FieldMeta& f = fields_.at(field_idx);
  TierIndex contended = f.tags.front();
  TierAllocator& tier = tiers_.tier(contended);

  auto free_bytes = [&] {
    TierUsage u = tier.usage();
    return u.capacity - u.used;
  };

  std::vector<Demotion> performed;
  if (free_bytes() >= needed) return performed;

  // Snapshot of victims, oldest placement first.
  std::vector<PlacementKey> candidates;
  {
    std::lock_guard lk(registry_mu_);
    for (const PlacementKey& k : placement_order_) candidates.push_back(k);
  }

  for (const PlacementKey& key : candidates) {
    if (free_bytes() >= needed) break;
    const FieldMeta& vf = fields_[key.field];
    if (vf.tags.size() < 2) continue;  // only multi-tag residents may be shunted
    ObjectRef victim{Handle::from_raw(key.root)};
    size_t vstripe = stripe_of(victim);

    bool self_held = vstripe == held_stripe;
    std::unique_lock<std::shared_mutex> vlock;
    if (!self_held) {
      vlock = std::unique_lock(stripes_[vstripe], std::try_to_lock);
      if (!vlock.owns_lock()) continue;  // victim busy; look further
    }

    Handle h = inline_handle(victim, vf);
    if (h.null() || h.tier() != contended) continue;
    uint64_t len = tiers_.tier(contended).buffer_size(h);

    // The next tag after the contended tier with room for the payload.
    auto pos = std::find(vf.tags.begin(), vf.tags.end(), contended);
    TierIndex target = contended;
    bool found = false;
    for (auto it = pos + 1; it != vf.tags.end(); ++it) {
      TierUsage u = tiers_.tier(*it).usage();
      if (u.used + 8 + len <= u.capacity) {
        target = *it;
        found = true;
        break;
      }
    }
    if (!found) continue;

    move_payload_locked(victim, key.field, target);
    demotions_.fetch_add(1, std::memory_order_relaxed);
    performed.push_back({victim.root, schema_.fields[key.field].name, tier.name(),
                         tiers_.tier(target).name(), len});
  }

  if (free_bytes() < needed)
    fail(Errc::insufficient_space, "tier '" + tier.name() + "': eviction reclaimed too little for " +
                                       std::to_string(needed) + " bytes");
  return performed;
}

void Store::registry_touch(ObjectRef obj, size_t field_idx) {
  PlacementKey key{obj.root.raw(), static_cast<uint32_t>(field_idx)};
  std::lock_guard lk(registry_mu_);
  auto it = placement_index_.find(key);
  if (it != placement_index_.end()) placement_order_.erase(it->second);
  placement_order_.push_back(key);
  placement_index_[key] = std::prev(placement_order_.end());
}

void Store::sync() { tiers_.sync_all(); }

StoreMetrics Store::metrics() const {
  StoreMetrics m;
  m.bytes_materialized = bytes_materialized_.load(std::memory_order_relaxed);
  m.demotions = demotions_.load(std::memory_order_relaxed);
  for (size_t i = 0; i < tiers_.count(); i++) {
    const TierAllocator& t = tiers_.tier(static_cast<TierIndex>(i));
    const TierCounters& c = t.counters();
    TierUsage u = t.usage();
    uint64_t serde = c.serde_events.load(std::memory_order_relaxed);
    m.tiers.push_back({t.name(), c.bytes_read.load(std::memory_order_relaxed),
                       c.bytes_written.load(std::memory_order_relaxed), serde, u.used,
                       u.capacity});
    m.serde_events += serde;
  }
  return m;
}

bool Store::placements_respect_tags() const {
  std::lock_guard lk(registry_mu_);
  auto& self = const_cast<Store&>(*this);
  for (const PlacementKey& key : placement_order_) {
    const FieldMeta& f = fields_[key.field];
    Handle h = self.inline_handle(ObjectRef{Handle::from_raw(key.root)}, f);
    if (h.null()) continue;
    if (std::find(f.tags.begin(), f.tags.end(), h.tier()) == f.tags.end()) return false;
  }
  return true;
}

Handle Store::alloc_record_region(uint64_t count, TierIndex tier) {
  if (count == 0) fail(Errc::bad_argument, "record region of zero elements");
  return tiers_.tier(tier).alloc(count * std::max<uint64_t>(layout_.record_size, 1));
}

}  // namespace strata
