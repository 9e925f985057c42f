#include "strata/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

namespace strata {

namespace fs = std::filesystem;

LayoutMode mode_from_name(std::string_view name) {
  if (name == "no-pmem") return LayoutMode::NoPmem;
  if (name == "all-pmem") return LayoutMode::AllPmem;
  if (name == "select-pmem") return LayoutMode::SelectPmem;
  fail(Errc::bad_argument, "mode must be no-pmem, all-pmem or select-pmem");
}

const char* mode_name(LayoutMode mode) {
  switch (mode) {
    case LayoutMode::NoPmem: return "no-pmem";
    case LayoutMode::AllPmem: return "all-pmem";
    case LayoutMode::SelectPmem: return "select-pmem";
  }
  return "?";
}

std::string BenchReport::to_csv() const {
  std::string out = "counter,value\n";
  auto row = [&](const char* k, uint64_t v) { out += std::string(k) + "," + std::to_string(v) + "\n"; };
  row("load_ns", load_ns);
  row("exec_ns", exec_ns);
  row("bytes_materialized", bytes_materialized);
  row("serde_events", serde_events);
  row("load_bytes_written", load_bytes_written);
  row("load_serde_events", load_serde_events);
  row("result_count", result_count);
  row("checksum", checksum);
  return out;
}

// ---------------------------------------------------------------------------
// Record codec.

std::vector<std::byte> serialize_record(const ObjectSchema& schema,
                                        const std::vector<Value>& values) {
  if (values.size() != schema.fields.size())
    fail(Errc::bad_argument, "record has " + std::to_string(values.size()) + " values, schema " +
                                 schema.name + " has " + std::to_string(schema.fields.size()));
  std::vector<std::byte> out;
  for (size_t i = 0; i < values.size(); i++) {
    const FieldSpec& f = schema.fields[i];
    const Value& v = values[i];
    if (kind_of(v) != f.kind)
      fail(Errc::kind_mismatch, "record value " + std::to_string(i) + " is not " + kind_name(f.kind));
    size_t at = out.size();
    if (is_variable(f.kind)) {
      uint64_t len = payload_size(v);
      out.resize(at + 4 + len);
      store_le(out.data() + at, len, 4);
      if (const auto* b = std::get_if<std::vector<std::byte>>(&v)) {
        std::memcpy(out.data() + at + 4, b->data(), len);
      } else {
        std::memcpy(out.data() + at + 4, std::get<std::string>(v).data(), len);
      }
    } else {
      uint32_t w = fixed_width(f.kind);
      out.resize(at + w);
      switch (f.kind) {
        case FieldKind::I16: store_le_t<int16_t>(out.data() + at, std::get<int16_t>(v)); break;
        case FieldKind::I32: store_le_t<int32_t>(out.data() + at, std::get<int32_t>(v)); break;
        case FieldKind::I64: store_le_t<int64_t>(out.data() + at, std::get<int64_t>(v)); break;
        case FieldKind::F32: store_le_t<float>(out.data() + at, std::get<float>(v)); break;
        case FieldKind::F64: store_le_t<double>(out.data() + at, std::get<double>(v)); break;
        default: break;
      }
    }
  }
  return out;
}

std::vector<Value> deserialize_record(const ObjectSchema& schema,
                                      std::span<const std::byte> bytes) {
  std::vector<Value> values;
  size_t at = 0;
  for (const FieldSpec& f : schema.fields) {
    if (is_variable(f.kind)) {
      if (at + 4 > bytes.size()) fail(Errc::bad_dataset, "record truncated in length prefix");
      uint64_t len = load_le(bytes.data() + at, 4);
      at += 4;
      if (at + len > bytes.size()) fail(Errc::bad_dataset, "record truncated in payload");
      if (f.kind == FieldKind::String) {
        values.emplace_back(std::string(reinterpret_cast<const char*>(bytes.data() + at), len));
      } else {
        values.emplace_back(std::vector<std::byte>(bytes.begin() + at, bytes.begin() + at + len));
      }
      at += len;
    } else {
      uint32_t w = fixed_width(f.kind);
      if (at + w > bytes.size()) fail(Errc::bad_dataset, "record truncated in fixed field");
      switch (f.kind) {
        case FieldKind::I16: values.emplace_back(load_le_t<int16_t>(bytes.data() + at)); break;
        case FieldKind::I32: values.emplace_back(load_le_t<int32_t>(bytes.data() + at)); break;
        case FieldKind::I64: values.emplace_back(load_le_t<int64_t>(bytes.data() + at)); break;
        case FieldKind::F32: values.emplace_back(load_le_t<float>(bytes.data() + at)); break;
        case FieldKind::F64: values.emplace_back(load_le_t<double>(bytes.data() + at)); break;
        default: break;
      }
      at += w;
    }
  }
  if (at != bytes.size()) fail(Errc::bad_dataset, "record has trailing bytes");
  return values;
}

// ---------------------------------------------------------------------------
// Dataset file: "STDS" u32 version u8 kind | u32 schema_len schema |
// u64 record_count (u32 len + payload)* | [u64 edge_count (u64,u64)*]

static constexpr char kDatasetMagic[4] = {'S', 'T', 'D', 'S'};
static constexpr uint32_t kDatasetVersion = 1;

void Dataset::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write dataset " + path.string());
  auto put = [&](const void* p, size_t n) { out.write(static_cast<const char*>(p), n); };
  auto put_u = [&](uint64_t v, size_t width) {
    unsigned char buf[8];
    store_le(buf, v, width);
    put(buf, width);
  };
  put(kDatasetMagic, 4);
  put_u(kDatasetVersion, 4);
  put_u(kind, 1);
  std::string schema_text = render_schema(schema);
  put_u(schema_text.size(), 4);
  put(schema_text.data(), schema_text.size());
  put_u(records.size(), 8);
  for (const auto& rec : records) {
    put_u(rec.size(), 4);
    put(rec.data(), rec.size());
  }
  if (kind == 1) {
    put_u(edges.size(), 8);
    for (const auto& [u, v] : edges) {
      put_u(u, 8);
      put_u(v, 8);
    }
  }
  if (!out) fail(Errc::io_error, "short write to " + path.string());
}

Dataset Dataset::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open dataset " + path.string());
  auto get = [&](void* p, size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      fail(Errc::bad_dataset, "dataset " + path.string() + " truncated");
  };
  auto get_u = [&](size_t width) {
    unsigned char buf[8];
    get(buf, width);
    return load_le(buf, width);
  };

  char magic[4];
  get(magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0)
    fail(Errc::bad_dataset, path.string() + " is not a dataset file");
  if (get_u(4) != kDatasetVersion) fail(Errc::bad_dataset, "unsupported dataset version");

  Dataset ds;
  ds.kind = static_cast<uint8_t>(get_u(1));
  if (ds.kind > 1) fail(Errc::bad_dataset, "unknown dataset kind");
  uint64_t schema_len = get_u(4);
  std::string schema_text(schema_len, '\0');
  get(schema_text.data(), schema_len);
  ds.schema = parse_schema(schema_text);

  uint64_t count = get_u(8);
  ds.records.reserve(count);
  for (uint64_t i = 0; i < count; i++) {
    uint64_t len = get_u(4);
    std::vector<std::byte> rec(len);
    if (len > 0) get(rec.data(), len);
    ds.records.push_back(std::move(rec));
  }
  if (ds.kind == 1) {
    uint64_t edge_count = get_u(8);
    ds.edges.reserve(edge_count);
    for (uint64_t i = 0; i < edge_count; i++) {
      uint64_t u = get_u(8);
      uint64_t v = get_u(8);
      ds.edges.emplace_back(u, v);
    }
  }
  return ds;
}

uint64_t file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  uint64_t h = kFnvOffset;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
  return h;
}

// ---------------------------------------------------------------------------
// Generators.

static ObjectSchema points_schema(uint32_t dims) {
  ObjectSchema s;
  s.name = "point";
  for (uint32_t j = 0; j < dims; j++)
    s.fields.push_back({"x" + std::to_string(j), FieldKind::F64, {"pmem"}});
  return s;
}

void gen_points(const PointsSpec& spec, const fs::path& out) {
  if (spec.n == 0 || spec.dims == 0 || spec.blobs == 0)
    fail(Errc::bad_argument, "gen_points: n, dims and blobs must be > 0");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);

  // Well-separated centers: 250 apart per blob in every dimension.
  std::vector<std::vector<double>> centers(spec.blobs, std::vector<double>(spec.dims));
  for (uint32_t b = 0; b < spec.blobs; b++)
    for (uint32_t j = 0; j < spec.dims; j++) centers[b][j] = 250.0 * b + jitter(rng);

  Dataset ds;
  ds.kind = 0;
  ds.schema = points_schema(spec.dims);
  std::vector<std::vector<double>> sums(spec.blobs, std::vector<double>(spec.dims, 0));
  std::vector<uint64_t> counts(spec.blobs, 0);

  std::vector<std::byte> rec(8 * spec.dims);
  for (uint64_t i = 0; i < spec.n; i++) {
    uint32_t b = static_cast<uint32_t>(i % spec.blobs);
    for (uint32_t j = 0; j < spec.dims; j++) {
      double v = centers[b][j] + noise(rng);
      store_le_t<double>(rec.data() + 8 * j, v);
      sums[b][j] += v;
    }
    counts[b]++;
    ds.records.push_back(rec);
  }
  ds.save(out);

  std::ofstream means(out.string() + ".means.csv", std::ios::trunc);
  if (!means) fail(Errc::io_error, "cannot write means sidecar");
  for (uint32_t b = 0; b < spec.blobs; b++) {
    means << b;
    for (uint32_t j = 0; j < spec.dims; j++)
      means << "," << (counts[b] ? sums[b][j] / double(counts[b]) : 0.0);
    means << "\n";
  }
}

std::string planted_feature_value(uint32_t feature, uint32_t width) {
  std::string v = "PLANT_" + std::to_string(feature);
  v.resize(width, '_');
  return v;
}

static ObjectSchema graph_schema(uint32_t features) {
  ObjectSchema s;
  s.name = "node";
  s.fields.push_back({"id", FieldKind::I64, {"pmem"}});
  for (uint32_t j = 0; j < features; j++)
    s.fields.push_back({"f" + std::to_string(j), FieldKind::String, {"pmem", "disk"}});
  s.fields.push_back({"payload", FieldKind::Bytes, {"disk"}});
  return s;
}

static std::string vocab_value(uint32_t feature, uint32_t word, uint32_t width) {
  std::string v = "F" + std::to_string(feature) + "V" + std::to_string(word);
  v.resize(width, '.');
  return v;
}

static Dataset build_graph_dataset(const GraphSpec& spec,
                                   const std::vector<std::pair<uint64_t, uint64_t>>& edges,
                                   std::vector<int64_t>* planted_out) {
  if (spec.nodes == 0 || spec.features == 0 || spec.feature_width == 0)
    fail(Errc::bad_argument, "gen_graph: nodes, features and feature_width must be > 0");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<uint32_t> word(0, 49);
  std::uniform_real_distribution<double> plant(0.0, 1.0);
  std::uniform_int_distribution<uint64_t> byte_draw(0, 255);

  Dataset ds;
  ds.kind = 1;
  ds.schema = graph_schema(spec.features);
  ds.edges = edges;

  std::vector<std::byte> payload(spec.payload_bytes);
  for (uint64_t i = 0; i < spec.nodes; i++) {
    std::vector<Value> values;
    values.emplace_back(static_cast<int64_t>(i));
    bool planted = spec.plant_rate > 0 && plant(rng) < spec.plant_rate;
    for (uint32_t j = 0; j < spec.features; j++) {
      std::string v = planted && j < 2 ? planted_feature_value(j, spec.feature_width)
                                       : vocab_value(j, word(rng), spec.feature_width);
      values.emplace_back(std::move(v));
    }
    for (auto& b : payload) b = static_cast<std::byte>(byte_draw(rng));
    values.emplace_back(payload);
    ds.records.push_back(serialize_record(ds.schema, values));
    if (planted && planted_out) planted_out->push_back(static_cast<int64_t>(i));
  }
  return ds;
}

static void write_planted_sidecar(const fs::path& out, const std::vector<int64_t>& planted) {
  std::ofstream side(out.string() + ".planted.csv", std::ios::trunc);
  if (!side) fail(Errc::io_error, "cannot write planted sidecar");
  side << "id\n";
  for (int64_t id : planted) side << id << "\n";
}

void gen_graph(const GraphSpec& spec, const fs::path& out) {
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::pair<uint64_t, uint64_t>> edges;
  if (spec.edges > 0) {
    if (spec.nodes < 2) fail(Errc::bad_argument, "edges need at least 2 nodes");
    std::uniform_int_distribution<uint64_t> node(0, spec.nodes - 1);
    edges.reserve(spec.edges);
    while (edges.size() < spec.edges) {
      uint64_t u = node(rng), v = node(rng);
      if (u != v) edges.emplace_back(u, v);
    }
  }
  std::vector<int64_t> planted;
  Dataset ds = build_graph_dataset(spec, edges, &planted);
  ds.save(out);
  write_planted_sidecar(out, planted);
}

void gen_graph_from_snap(const fs::path& snap_path, const GraphSpec& spec, const fs::path& out) {
  std::ifstream in(snap_path);
  if (!in) fail(Errc::io_error, "cannot open edge list " + snap_path.string());
  std::vector<std::pair<uint64_t, uint64_t>> edges;
  uint64_t max_id = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    uint64_t u, v;
    if (!(ss >> u >> v)) {
      fail(Errc::bad_dataset,
           snap_path.string() + " line " + std::to_string(lineno) + ": expected two node ids");
    }
    std::string rest;
    if (ss >> rest)
      fail(Errc::bad_dataset,
           snap_path.string() + " line " + std::to_string(lineno) + ": trailing tokens");
    edges.emplace_back(u, v);
    max_id = std::max({max_id, u, v});
  }
  GraphSpec derived = spec;
  derived.nodes = edges.empty() ? spec.nodes : max_id + 1;
  std::vector<int64_t> planted;
  Dataset ds = build_graph_dataset(derived, edges, &planted);
  ds.save(out);
  write_planted_sidecar(out, planted);
}

// ---------------------------------------------------------------------------
// Bench plumbing.

std::vector<TierConfig> make_bench_tiers(const fs::path& dir, SyntheticLatency pmem_latency,
                                         SyntheticLatency disk_latency) {
  std::vector<TierConfig> tiers(3);
  tiers[0] = {"dram", 256ULL << 20, TierConfig::Backing::Volatile, {}, {}};
  tiers[1] = {"pmem", 512ULL << 20, TierConfig::Backing::MappedFile, dir / "pmem.arena",
              pmem_latency};
  tiers[2] = {"disk", 4ULL << 30, TierConfig::Backing::Directory, dir / "blobs", disk_latency};
  return tiers;
}

void reset_tier_backing(const std::vector<TierConfig>& tiers) {
  for (const TierConfig& cfg : tiers) {
    if (cfg.path.empty()) continue;
    std::error_code ec;
    fs::remove_all(cfg.path, ec);
  }
}

ObjectSchema apply_mode(const ObjectSchema& schema, LayoutMode mode,
                        const std::vector<std::string>& compute_fields) {
  ObjectSchema out;
  out.name = schema.name;
  for (const FieldSpec& f : schema.fields) {
    FieldSpec g = f;
    switch (mode) {
      case LayoutMode::NoPmem:
        break;  // schema unused under NO_PMEM
      case LayoutMode::AllPmem:
        g.tags = {"pmem"};
        break;
      case LayoutMode::SelectPmem: {
        bool compute = std::find(compute_fields.begin(), compute_fields.end(), f.name) !=
                       compute_fields.end();
        // Fixed fields live inline in the record (on pmem); only variable
        // payloads can be sent to disk individually.
        g.tags = (!is_variable(f.kind) || compute) ? std::vector<std::string>{"pmem"}
                                                   : std::vector<std::string>{"disk"};
        break;
      }
    }
    out.fields.push_back(std::move(g));
  }
  return out;
}

namespace {

struct TierTotals {
  uint64_t bytes_written = 0;
  uint64_t serde = 0;
};

TierTotals totals(const TierSet& tiers) {
  TierTotals t;
  for (size_t i = 0; i < tiers.count(); i++) {
    const TierCounters& c = tiers.tier(static_cast<TierIndex>(i)).counters();
    t.bytes_written += c.bytes_written.load(std::memory_order_relaxed);
    t.serde += c.serde_events.load(std::memory_order_relaxed);
  }
  return t;
}

std::unique_ptr<Store> open_mode_store(const Dataset& ds, const BenchConfig& config,
                                       const std::vector<std::string>& compute_fields) {
  ObjectSchema schema = config.schema_override
                            ? *config.schema_override
                            : apply_mode(ds.schema, config.mode, compute_fields);
  std::vector<std::string> names;
  for (const TierConfig& cfg : config.tiers) names.push_back(cfg.name);
  FieldAssignment assignment = first_tag_assignment(schema);
  LayoutPlan layout = compute_layout(schema, assignment, names);
  auto store =
      std::make_unique<Store>(TierSet::open(config.tiers), std::move(schema), std::move(layout));
  if (config.recorder) store->attach_recorder(config.recorder);
  return store;
}

}  // namespace

// ---------------------------------------------------------------------------
// k-means (Lloyd's). The arithmetic path is shared across layouts, so
// identical inputs give bit-identical centroids regardless of mode.

KmeansResult run_kmeans(const fs::path& dataset_path, uint32_t k, uint32_t iterations,
                        const BenchConfig& config) {
  Dataset ds = Dataset::load(dataset_path);
  if (ds.kind != 0) fail(Errc::bad_dataset, "not a points dataset");
  const uint32_t d = static_cast<uint32_t>(ds.schema.fields.size());
  const uint64_t n = ds.records.size();
  if (k == 0) fail(Errc::bad_argument, "k must be > 0");
  for (const FieldSpec& f : ds.schema.fields)
    if (f.kind != FieldKind::F64) fail(Errc::bad_dataset, "points dataset must be all f64");

  if (config.fresh) reset_tier_backing(config.tiers);

  KmeansResult result;
  BenchReport& report = result.report;

  // Mode-specific storage and fetch path.
  std::unique_ptr<Store> store;
  std::vector<ObjectRef> objects;
  std::vector<Handle> blob_handles;
  std::optional<TierSet> raw_tiers;
  uint64_t no_mode_materialized = 0;

  uint64_t t_load = now_ns();
  if (config.mode == LayoutMode::NoPmem) {
    raw_tiers = TierSet::open(config.tiers);
    TierAllocator& disk = raw_tiers->tier("disk");
    blob_handles.reserve(n);
    for (const auto& rec : ds.records) blob_handles.push_back(disk.create_buffer(rec));
  } else {
    store = open_mode_store(ds, config, {});
    objects.reserve(n);
    std::vector<size_t> field_idx(d);
    for (uint32_t j = 0; j < d; j++) field_idx[j] = j;
    for (const auto& rec : ds.records) {
      ObjectRef obj = store->create_object();
      for (uint32_t j = 0; j < d; j++) {
        double v = load_le_t<double>(rec.data() + 8 * j);
        if (config.recorder) {
          store->set_field(obj, field_idx[j], Value(v));
        } else {
          store->set_f64(obj, field_idx[j], v);
        }
      }
      objects.push_back(obj);
    }
  }
  report.load_ns = now_ns() - t_load;

  TierSet& tier_view = store ? store->tiers() : *raw_tiers;
  TierTotals at_load = totals(tier_view);
  report.load_bytes_written = at_load.bytes_written;
  report.load_serde_events = at_load.serde;
  uint64_t materialized_at_load = store ? store->bytes_materialized() : no_mode_materialized;

  auto fetch = [&](uint64_t i, double* out) {
    if (config.mode == LayoutMode::NoPmem) {
      TierAllocator& disk = raw_tiers->tier("disk");
      std::vector<std::byte> rec = disk.retrieve_buffer(blob_handles[i]);
      no_mode_materialized += rec.size();
      for (uint32_t j = 0; j < d; j++) out[j] = load_le_t<double>(rec.data() + 8 * j);
    } else if (config.recorder) {
      for (uint32_t j = 0; j < d; j++)
        out[j] = std::get<double>(*store->get_field(objects[i], j));
    } else {
      for (uint32_t j = 0; j < d; j++) out[j] = store->get_f64(objects[i], j);
    }
  };

  uint64_t t_exec = now_ns();

  // Initialization: the first k distinct points.
  std::vector<std::vector<double>> centroids;
  std::vector<double> point(d);
  for (uint64_t i = 0; i < n && centroids.size() < k; i++) {
    fetch(i, point.data());
    bool dup = false;
    for (const auto& c : centroids)
      if (std::equal(c.begin(), c.end(), point.begin())) { dup = true; break; }
    if (!dup) centroids.push_back(point);
  }
  if (centroids.size() < k)
    fail(Errc::bad_argument, "k = " + std::to_string(k) + " exceeds the number of distinct points");

  std::vector<std::vector<double>> sums(k, std::vector<double>(d));
  std::vector<uint64_t> counts(k);
  for (uint32_t it = 0; it < iterations; it++) {
    for (auto& s : sums) std::fill(s.begin(), s.end(), 0.0);
    std::fill(counts.begin(), counts.end(), uint64_t{0});
    for (uint64_t i = 0; i < n; i++) {
      fetch(i, point.data());
      uint32_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (uint32_t c = 0; c < k; c++) {
        double dist = 0;
        for (uint32_t j = 0; j < d; j++) {
          double delta = point[j] - centroids[c][j];
          dist += delta * delta;
        }
        if (dist < best_dist) {
          best_dist = dist;
          best = c;
        }
      }
      for (uint32_t j = 0; j < d; j++) sums[best][j] += point[j];
      counts[best]++;
    }
    for (uint32_t c = 0; c < k; c++) {
      if (counts[c] == 0) continue;  // keep the previous centroid
      for (uint32_t j = 0; j < d; j++) centroids[c][j] = sums[c][j] / double(counts[c]);
    }
  }
  report.exec_ns = now_ns() - t_exec;

  TierTotals at_end = totals(tier_view);
  report.serde_events = at_end.serde - at_load.serde;
  uint64_t materialized_total = store ? store->bytes_materialized() : no_mode_materialized;
  report.bytes_materialized = materialized_total - materialized_at_load;

  uint64_t h = kFnvOffset;
  for (const auto& c : centroids)
    for (double v : c) h = fnv1a_u64(std::bit_cast<uint64_t>(v), h);
  report.checksum = h;
  report.result_count = k;

  result.centroids = std::move(centroids);
  return result;
}

// ---------------------------------------------------------------------------
// Graph search: conjunction of (feature, value) equality constraints over all
// node records. Under NO_PMEM each touched record is deserialized whole; under
// the tiered layouts only the constrained features are materialized.

SearchResult run_graph_search(const fs::path& dataset_path,
                              const std::vector<std::pair<std::string, std::string>>& constraints,
                              const BenchConfig& config) {
  Dataset ds = Dataset::load(dataset_path);
  if (ds.kind != 1) fail(Errc::bad_dataset, "not a graph dataset");
  const uint64_t n = ds.records.size();

  std::vector<size_t> constraint_idx;
  std::vector<std::string> constrained_fields;
  for (const auto& [feature, value] : constraints) {
    int idx = ds.schema.index_of(feature);
    if (idx < 0) fail(Errc::missing_field, "unknown feature '" + feature + "'");
    if (ds.schema.fields[static_cast<size_t>(idx)].kind != FieldKind::String)
      fail(Errc::bad_argument, "feature '" + feature + "' is not a string field");
    constraint_idx.push_back(static_cast<size_t>(idx));
    constrained_fields.push_back(feature);
  }
  int id_idx = ds.schema.index_of("id");
  if (id_idx < 0) fail(Errc::bad_dataset, "graph dataset lacks an id field");

  if (config.fresh) reset_tier_backing(config.tiers);

  SearchResult result;
  BenchReport& report = result.report;

  std::unique_ptr<Store> store;
  std::vector<ObjectRef> objects;
  std::vector<Handle> blob_handles;
  std::optional<TierSet> raw_tiers;
  std::atomic<uint64_t> no_mode_materialized{0};

  uint64_t t_load = now_ns();
  if (config.mode == LayoutMode::NoPmem) {
    raw_tiers = TierSet::open(config.tiers);
    TierAllocator& disk = raw_tiers->tier("disk");
    blob_handles.reserve(n);
    for (const auto& rec : ds.records) blob_handles.push_back(disk.create_buffer(rec));
  } else {
    store = open_mode_store(ds, config, constrained_fields);
    objects.reserve(n);
    for (const auto& rec : ds.records) {
      std::vector<Value> values = deserialize_record(ds.schema, rec);
      ObjectRef obj = store->create_object();
      for (size_t f = 0; f < values.size(); f++) store->set_field(obj, f, values[f]);
      objects.push_back(obj);
    }
  }
  report.load_ns = now_ns() - t_load;

  TierSet& tier_view = store ? store->tiers() : *raw_tiers;
  TierTotals at_load = totals(tier_view);
  report.load_bytes_written = at_load.bytes_written;
  report.load_serde_events = at_load.serde;
  uint64_t materialized_at_load = store ? store->bytes_materialized() : 0;

  auto matches_tiered = [&](uint64_t i) {
    for (size_t c = 0; c < constraint_idx.size(); c++) {
      auto v = store->get_field(objects[i], constraint_idx[c]);
      if (!v || std::get<std::string>(*v) != constraints[c].second) return false;
    }
    return true;
  };

  auto scan_range = [&](uint64_t begin, uint64_t end, std::vector<int64_t>& out) {
    if (config.mode == LayoutMode::NoPmem) {
      TierAllocator& disk = raw_tiers->tier("disk");
      for (uint64_t i = begin; i < end; i++) {
        // The whole record comes off disk and is deserialized, payload included.
        std::vector<std::byte> rec = disk.retrieve_buffer(blob_handles[i]);
        no_mode_materialized.fetch_add(rec.size(), std::memory_order_relaxed);
        std::vector<Value> values = deserialize_record(ds.schema, rec);
        bool ok = true;
        for (size_t c = 0; c < constraint_idx.size() && ok; c++)
          ok = std::get<std::string>(values[constraint_idx[c]]) == constraints[c].second;
        if (ok) out.push_back(std::get<int64_t>(values[static_cast<size_t>(id_idx)]));
      }
    } else {
      for (uint64_t i = begin; i < end; i++) {
        if (!matches_tiered(i)) continue;
        out.push_back(store->get_i64(objects[i], static_cast<size_t>(id_idx)));
      }
    }
  };

  uint64_t t_exec = now_ns();
  if (config.threads <= 1 || n < 2) {
    scan_range(0, n, result.ids);
  } else {
    uint32_t nthreads = std::min<uint32_t>(config.threads, 64);
    std::vector<std::vector<int64_t>> partial(nthreads);
    std::vector<std::thread> workers;
    uint64_t chunk = (n + nthreads - 1) / nthreads;
    for (uint32_t t = 0; t < nthreads; t++) {
      uint64_t begin = t * chunk, end = std::min(n, begin + chunk);
      if (begin >= end) break;
      workers.emplace_back([&, begin, end, t] { scan_range(begin, end, partial[t]); });
    }
    for (auto& w : workers) w.join();
    for (auto& part : partial)
      result.ids.insert(result.ids.end(), part.begin(), part.end());
  }
  report.exec_ns = now_ns() - t_exec;

  TierTotals at_end = totals(tier_view);
  report.serde_events = at_end.serde - at_load.serde;
  uint64_t materialized_total =
      store ? store->bytes_materialized() : no_mode_materialized.load();
  report.bytes_materialized = materialized_total - materialized_at_load;

  uint64_t h = kFnvOffset;
  for (int64_t id : result.ids) h = fnv1a_u64(static_cast<uint64_t>(id), h);
  report.checksum = h;
  report.result_count = result.ids.size();
  return result;
}

}  // namespace strata
