#pragma once
// Profiling inputs for the placement optimizer: per-field access counts and
// sizes from an instrumented run, per-device latency estimates from
// microbenchmarks, capacities and failure probabilities per device, and the
// access/recompute cost matrices. Round-trips through a sectioned CSV.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "strata/store.hpp"

namespace strata {

struct FieldProfile {
  std::string name;
  uint64_t accesses = 0;  // F_i: reads + writes over the run
  double bytes = 1;       // B_i: fixed width, or mean payload size
};

struct DeviceProfile {
  std::string name;
  uint64_t capacity = 0;      // S_j
  double failure_prob = 0;    // P_j in [0,1]
};

struct Profile {
  std::vector<FieldProfile> fields;
  std::vector<DeviceProfile> devices;
  std::vector<double> access_ns;     // C, n x m row-major
  std::vector<double> recompute_ns;  // R, n x m row-major

  size_t n() const { return fields.size(); }
  size_t m() const { return devices.size(); }
  double& c(size_t i, size_t j) { return access_ns[i * m() + j]; }
  double c(size_t i, size_t j) const { return access_ns[i * m() + j]; }
  double& r(size_t i, size_t j) { return recompute_ns[i * m() + j]; }
  double r(size_t i, size_t j) const { return recompute_ns[i * m() + j]; }
  int field_index(std::string_view name) const;
  int device_index(std::string_view name) const;

  void save(const std::filesystem::path& path) const;
  static Profile load(const std::filesystem::path& path);
};

struct LatencyEstimate {
  uint64_t size = 0;
  double read_ns = 0;   // median ns per access at this size
  double write_ns = 0;
};

// Measures median read/write latency per access at each sample size.
std::vector<LatencyEstimate> microbench_device(TierAllocator& tier,
                                               std::span<const uint64_t> sizes,
                                               uint32_t repetitions);

// Collects F/B and per-(field,device) latency means from store accesses.
class ProfileSession : public AccessRecorder {
 public:
  explicit ProfileSession(const ObjectSchema& schema);

  void record(std::string_view field, std::string_view device, uint64_t bytes,
              uint64_t ns) override;

  void set_failure_prob(std::string_view device, double p);
  void set_recompute(std::string_view field, std::string_view device, double ns);

  uint64_t access_count(std::string_view field) const;

  // Builds the full profile: S_j from tier capacities, C_ij from observed
  // means where available and from microbenchmarks otherwise, B_i from
  // observed payload sizes (fixed widths for scalar fields).
  Profile finish(TierSet& tiers, std::span<const uint64_t> bench_sizes,
                 uint32_t repetitions);

 private:
  struct Cell {
    uint64_t count = 0;
    double ns_sum = 0;
    uint64_t bytes_sum = 0;
  };

  ObjectSchema schema_;
  mutable std::mutex mu_;
  std::map<std::string, std::map<std::string, Cell>, std::less<>> cells_;  // field -> device
  std::map<std::string, double, std::less<>> failure_prob_;
  std::map<std::pair<std::string, std::string>, double> recompute_;
};

// Piecewise-linear interpolation over size->ns estimates, clamped at the ends.
double interpolate_latency(const std::vector<LatencyEstimate>& table, double size, bool write);

}  // namespace strata
