#pragma once
// Shared test scaffolding: unique scratch directories and tier fixtures.

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "strata/tiers.hpp"

namespace strata::test {

namespace fs = std::filesystem;

// Test scratch space. Prefers /dev/shm: syscall-heavy tiers (one file per
// blob) are markedly faster there than on overlay/network filesystems.
inline fs::path scratch_root() {
  if (const char* env = std::getenv("STRATA_TEST_TMPDIR")) return env;
  std::error_code ec;
  fs::path shm = "/dev/shm";
  if (fs::is_directory(shm, ec) && !ec) return shm;
  return fs::temp_directory_path();
}

class TempDir {
 public:
  explicit TempDir(const std::string& prefix) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = scratch_root() /
            (prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// dram/pmem/disk trio with small capacities for unit tests.
inline std::vector<TierConfig> small_tiers(const fs::path& dir, uint64_t dram = 1 << 20,
                                           uint64_t pmem = 1 << 20, uint64_t disk = 8 << 20) {
  return {
      {"dram", dram, TierConfig::Backing::Volatile, {}, {}},
      {"pmem", pmem, TierConfig::Backing::MappedFile, dir / "pmem.arena", {}},
      {"disk", disk, TierConfig::Backing::Directory, dir / "blobs", {}},
  };
}

}  // namespace strata::test
