#pragma once
// Benchmark workloads: synthetic dataset generators, Lloyd's k-means, and a
// multi-constraint graph feature search, each runnable under three layouts:
//
//   NO_PMEM     whole records serialized to the disk tier; every touch
//               deserializes the full record into working memory
//   ALL_PMEM    records and payloads live on the pmem tier
//   SELECT_PMEM compute/search fields on pmem, remaining payloads on disk
//
// Results (centroids, match sets) are identical across layouts by
// construction; the layouts differ only in where bytes live and what gets
// materialized.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "strata/store.hpp"

namespace strata {

enum class LayoutMode { NoPmem, AllPmem, SelectPmem };

LayoutMode mode_from_name(std::string_view name);  // no-pmem | all-pmem | select-pmem
const char* mode_name(LayoutMode mode);

struct BenchReport {
  uint64_t load_ns = 0;
  uint64_t exec_ns = 0;
  uint64_t bytes_materialized = 0;   // execution phase
  uint64_t serde_events = 0;         // execution phase
  uint64_t load_bytes_written = 0;
  uint64_t load_serde_events = 0;
  uint64_t result_count = 0;
  uint64_t checksum = 0;

  std::string to_csv() const;  // rows of counter,value
};

// ---------------------------------------------------------------------------
// Datasets: length-prefixed binary record stream with an embedded schema.

struct Dataset {
  uint8_t kind = 0;  // 0 = points, 1 = graph
  ObjectSchema schema;
  std::vector<std::vector<std::byte>> records;       // serialized field tuples
  std::vector<std::pair<uint64_t, uint64_t>> edges;  // graph datasets only

  static Dataset load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

std::vector<std::byte> serialize_record(const ObjectSchema& schema,
                                        const std::vector<Value>& values);
std::vector<Value> deserialize_record(const ObjectSchema& schema,
                                      std::span<const std::byte> bytes);

uint64_t file_checksum(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Generators.

struct PointsSpec {
  uint64_t n = 100'000;
  uint32_t dims = 12;
  uint32_t blobs = 8;   // generating cluster centers
  uint64_t seed = 1;
};

// Writes the dataset and a "<out>.means.csv" sidecar with the exact sample
// mean of each generating blob.
void gen_points(const PointsSpec& spec, const std::filesystem::path& out);

struct GraphSpec {
  uint64_t nodes = 10'000;
  uint64_t edges = 0;
  uint32_t features = 4;
  uint32_t feature_width = 12;
  uint64_t payload_bytes = 10'000;   // the large opaque field
  double plant_rate = 0;             // fraction of nodes given the planted pair
  uint64_t seed = 1;
};

// Planted nodes carry planted_feature_value(j, width) in features 0 and 1;
// ids are listed in "<out>.planted.csv".
void gen_graph(const GraphSpec& spec, const std::filesystem::path& out);
std::string planted_feature_value(uint32_t feature, uint32_t width);

// Builds a graph dataset from a SNAP whitespace edge list ('#' comments
// allowed); node features and payloads are synthesized from spec.seed.
void gen_graph_from_snap(const std::filesystem::path& snap_path, const GraphSpec& spec,
                         const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Benchmarks.

struct BenchConfig {
  LayoutMode mode = LayoutMode::AllPmem;
  std::vector<TierConfig> tiers;
  std::optional<ObjectSchema> schema_override;  // annotated schema drives placement
  AccessRecorder* recorder = nullptr;
  uint32_t threads = 1;  // graph scan only; results independent of the count
  bool fresh = true;     // wipe tier backing before the run
};

// dram/pmem/disk trio rooted under dir, with optional injected latencies.
std::vector<TierConfig> make_bench_tiers(const std::filesystem::path& dir,
                                         SyntheticLatency pmem_latency = {},
                                         SyntheticLatency disk_latency = {});
void reset_tier_backing(const std::vector<TierConfig>& tiers);

// Rewrites tags for a layout mode: ALL_PMEM puts everything on pmem;
// SELECT_PMEM keeps compute fields (and all fixed fields, which live inline)
// on pmem and sends other variable payloads to disk.
ObjectSchema apply_mode(const ObjectSchema& schema, LayoutMode mode,
                        const std::vector<std::string>& compute_fields);

struct KmeansResult {
  BenchReport report;
  std::vector<std::vector<double>> centroids;
};

KmeansResult run_kmeans(const std::filesystem::path& dataset, uint32_t k, uint32_t iterations,
                        const BenchConfig& config);

struct SearchResult {
  BenchReport report;
  std::vector<int64_t> ids;
};

SearchResult run_graph_search(const std::filesystem::path& dataset,
                              const std::vector<std::pair<std::string, std::string>>& constraints,
                              const BenchConfig& config);

}  // namespace strata
