#include "strata/common.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace strata {

static uint64_t measure_clock_overhead() {
  std::vector<uint64_t> deltas;
  deltas.reserve(1024);
  uint64_t prev = now_ns();
  for (int i = 0; i < 1024; i++) {
    uint64_t t = now_ns();
    deltas.push_back(t - prev);
    prev = t;
  }
  std::sort(deltas.begin(), deltas.end());
  return deltas[deltas.size() / 2];
}

uint64_t clock_overhead_ns() {
  static const uint64_t overhead = measure_clock_overhead();
  return overhead;
}

void spin_until(uint64_t t0, uint64_t ns) {
  if (ns == 0) return;
  // Exit check, entry/exit call halves, and the measuring caller's own clock
  // read each eat into the budget; 3x the calibrated clock cost centers
  // injected latencies on their nominal value (verified by the microbench).
  uint64_t comp = 3 * clock_overhead_ns();
  uint64_t target = ns > comp ? ns - comp : 0;
  uint64_t deadline = t0 + target;
  // Sleep through the bulk of long waits, spin the tail for precision.
  constexpr uint64_t kSleepSlack = 120'000;  // ns
  uint64_t t = now_ns();
  if (deadline > t + 2 * kSleepSlack) {
    std::this_thread::sleep_for(std::chrono::nanoseconds(deadline - t - kSleepSlack));
  }
  while (now_ns() < deadline) {
  }
}

}  // namespace strata
