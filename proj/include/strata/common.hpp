#pragma once
// Shared plumbing: error category, little-endian codecs, FNV-1a, clock helpers.

#include <bit>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace strata {

enum class Errc {
  syntax_error,        // schema / config text malformed
  unknown_tier,        // tag or tier name not registered
  duplicate_field,
  duplicate_tag,
  empty_tags,
  kind_mismatch,       // value type vs schema kind
  missing_field,       // assignment or lookup lacks a schema field
  tier_not_tagged,     // requested tier not in the field's tag list
  out_of_bounds,
  capacity_exhausted,  // tier quota would be exceeded
  all_tiers_full,      // every tagged tier rejected a placement
  insufficient_space,  // eviction could not reclaim enough
  capacity_mismatch,   // reopened arena disagrees with config
  corrupt_data,        // bad magic/version/length prefix
  io_error,
  infeasible,          // placement problem has no feasible assignment
  too_large,           // brute-force instance over the enumeration cap
  bad_profile,         // profile CSV malformed or incomplete
  bad_dataset,         // dataset file malformed
  bad_argument,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::syntax_error: return "syntax_error";
    case Errc::unknown_tier: return "unknown_tier";
    case Errc::duplicate_field: return "duplicate_field";
    case Errc::duplicate_tag: return "duplicate_tag";
    case Errc::empty_tags: return "empty_tags";
    case Errc::kind_mismatch: return "kind_mismatch";
    case Errc::missing_field: return "missing_field";
    case Errc::tier_not_tagged: return "tier_not_tagged";
    case Errc::out_of_bounds: return "out_of_bounds";
    case Errc::capacity_exhausted: return "capacity_exhausted";
    case Errc::all_tiers_full: return "all_tiers_full";
    case Errc::insufficient_space: return "insufficient_space";
    case Errc::capacity_mismatch: return "capacity_mismatch";
    case Errc::corrupt_data: return "corrupt_data";
    case Errc::io_error: return "io_error";
    case Errc::infeasible: return "infeasible";
    case Errc::too_large: return "too_large";
    case Errc::bad_profile: return "bad_profile";
    case Errc::bad_dataset: return "bad_dataset";
    case Errc::bad_argument: return "bad_argument";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

// ---------------------------------------------------------------------------
// Little-endian codecs. Everything on a storage medium is little-endian,
// independent of host byte order.

inline void store_le(void* dst, uint64_t v, size_t width) {
  auto* p = static_cast<unsigned char*>(dst);
  for (size_t i = 0; i < width; i++) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline uint64_t load_le(const void* src, size_t width) {
  const auto* p = static_cast<const unsigned char*>(src);
  uint64_t v = 0;
  for (size_t i = 0; i < width; i++) v |= uint64_t(p[i]) << (8 * i);
  return v;
}

template <typename T>
inline void store_le_t(void* dst, T v) {
  if constexpr (std::is_same_v<T, float>) {
    store_le(dst, std::bit_cast<uint32_t>(v), 4);
  } else if constexpr (std::is_same_v<T, double>) {
    store_le(dst, std::bit_cast<uint64_t>(v), 8);
  } else {
    static_assert(std::is_integral_v<T>);
    store_le(dst, static_cast<uint64_t>(static_cast<std::make_unsigned_t<T>>(v)), sizeof(T));
  }
}

template <typename T>
inline T load_le_t(const void* src) {
  if constexpr (std::is_same_v<T, float>) {
    return std::bit_cast<float>(static_cast<uint32_t>(load_le(src, 4)));
  } else if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(load_le(src, 8));
  } else {
    static_assert(std::is_integral_v<T>);
    return static_cast<T>(static_cast<std::make_unsigned_t<T>>(load_le(src, sizeof(T))));
  }
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit. Used for map hashing and result/dataset checksums.

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; i++) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a_u64(uint64_t v, uint64_t h = kFnvOffset) {
  unsigned char buf[8];
  store_le(buf, v, 8);
  return fnv1a(buf, 8, h);
}

// ---------------------------------------------------------------------------
// Clock helpers. spin_until() busy-waits (sleeping for the bulk of long
// waits) and is calibrated against the clock-read cost so that injected
// latencies land close to their nominal value even at the ~100 ns scale.

inline uint64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

uint64_t clock_overhead_ns();              // cached median cost of one now_ns()
void spin_until(uint64_t t0, uint64_t ns); // wait until now_ns() >= t0 + ns (calibrated)

}  // namespace strata
