#include "strata/profiling.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <fstream>

namespace strata {

namespace fs = std::filesystem;

int Profile::field_index(std::string_view name) const {
  for (size_t i = 0; i < fields.size(); i++)
    if (fields[i].name == name) return static_cast<int>(i);
  return -1;
}

int Profile::device_index(std::string_view name) const {
  for (size_t j = 0; j < devices.size(); j++)
    if (devices[j].name == name) return static_cast<int>(j);
  return -1;
}

static std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

static double parse_double(std::string_view s, const std::string& what) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(Errc::bad_profile, "bad number '" + std::string(s) + "' in " + what);
  return v;
}

static uint64_t parse_u64(std::string_view s, const std::string& what) {
  uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(Errc::bad_profile, "bad integer '" + std::string(s) + "' in " + what);
  return v;
}

static std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= line.size()) {
    size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) comma = line.size();
    parts.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return parts;
}

void Profile::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write profile " + path.string());
  out << "fields:\n";
  out << "name,F,B\n";
  for (const FieldProfile& f : fields)
    out << f.name << "," << f.accesses << "," << fmt_double(f.bytes) << "\n";
  out << "devices:\n";
  out << "name,S,P\n";
  for (const DeviceProfile& d : devices)
    out << d.name << "," << d.capacity << "," << fmt_double(d.failure_prob) << "\n";
  out << "C:\n";
  out << "field,device,ns\n";
  for (size_t i = 0; i < n(); i++)
    for (size_t j = 0; j < m(); j++)
      out << fields[i].name << "," << devices[j].name << "," << fmt_double(c(i, j)) << "\n";
  out << "R:\n";
  out << "field,device,ns\n";
  for (size_t i = 0; i < n(); i++)
    for (size_t j = 0; j < m(); j++)
      out << fields[i].name << "," << devices[j].name << "," << fmt_double(r(i, j)) << "\n";
}

Profile Profile::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open profile " + path.string());

  Profile p;
  enum class Section { None, Fields, Devices, C, R } section = Section::None;
  std::vector<std::tuple<std::string, std::string, double>> c_rows, r_rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line == "fields:") { section = Section::Fields; continue; }
    if (line == "devices:") { section = Section::Devices; continue; }
    if (line == "C:") { section = Section::C; continue; }
    if (line == "R:") { section = Section::R; continue; }
    std::string where = "profile line " + std::to_string(lineno);
    auto parts = split_csv(line);
    switch (section) {
      case Section::None:
        fail(Errc::bad_profile, where + ": data before a section marker");
      case Section::Fields: {
        if (line == "name,F,B") continue;  // optional header row
        if (parts.size() != 3) fail(Errc::bad_profile, where + ": fields rows are name,F,B");
        FieldProfile f;
        f.name = parts[0];
        f.accesses = parse_u64(parts[1], where);
        f.bytes = parse_double(parts[2], where);
        if (f.bytes <= 0) fail(Errc::bad_profile, where + ": B must be > 0");
        p.fields.push_back(std::move(f));
        break;
      }
      case Section::Devices: {
        if (line == "name,S,P") continue;
        if (parts.size() != 3) fail(Errc::bad_profile, where + ": devices rows are name,S,P");
        DeviceProfile d;
        d.name = parts[0];
        d.capacity = parse_u64(parts[1], where);
        d.failure_prob = parse_double(parts[2], where);
        if (d.capacity == 0) fail(Errc::bad_profile, where + ": S must be > 0");
        if (d.failure_prob < 0 || d.failure_prob > 1)
          fail(Errc::bad_profile, where + ": P must be in [0,1]");
        p.devices.push_back(std::move(d));
        break;
      }
      case Section::C:
      case Section::R: {
        if (line == "field,device,ns") continue;
        if (parts.size() != 3) fail(Errc::bad_profile, where + ": matrix rows are field,device,ns");
        double ns = parse_double(parts[2], where);
        auto& rows = section == Section::C ? c_rows : r_rows;
        rows.emplace_back(parts[0], parts[1], ns);
        break;
      }
    }
  }

  if (p.fields.empty()) fail(Errc::bad_profile, "profile has no fields");
  if (p.devices.empty()) fail(Errc::bad_profile, "profile has no devices");
  p.access_ns.assign(p.n() * p.m(), -1);
  p.recompute_ns.assign(p.n() * p.m(), -1);

  auto fill = [&](std::vector<double>& matrix, const auto& rows, const char* name) {
    for (const auto& [field, device, ns] : rows) {
      int i = p.field_index(field);
      int j = p.device_index(device);
      if (i < 0) fail(Errc::bad_profile, std::string(name) + " row names unknown field '" + field + "'");
      if (j < 0) fail(Errc::bad_profile, std::string(name) + " row names unknown device '" + device + "'");
      matrix[static_cast<size_t>(i) * p.m() + static_cast<size_t>(j)] = ns;
    }
    for (size_t i = 0; i < p.n(); i++)
      for (size_t j = 0; j < p.m(); j++)
        if (matrix[i * p.m() + j] < 0)
          fail(Errc::bad_profile, std::string(name) + " matrix is missing entry (" +
                                      p.fields[i].name + ", " + p.devices[j].name + ")");
  };
  fill(p.access_ns, c_rows, "C");
  fill(p.recompute_ns, r_rows, "R");

  for (size_t i = 0; i < p.n(); i++)
    for (size_t j = 0; j < p.m(); j++) {
      if (p.c(i, j) <= 0)
        fail(Errc::bad_profile, "C(" + p.fields[i].name + ", " + p.devices[j].name + ") must be > 0");
    }
  return p;
}

// ---------------------------------------------------------------------------
// Device microbenchmark.

std::vector<LatencyEstimate> microbench_device(TierAllocator& tier,
                                               std::span<const uint64_t> sizes,
                                               uint32_t repetitions) {
  if (repetitions == 0) fail(Errc::bad_argument, "microbench needs repetitions > 0");
  if (sizes.empty()) fail(Errc::bad_argument, "microbench needs at least one sample size");

  // Ops are timed in small batches: one clock-read pair per batch instead of
  // per op keeps ~100 ns devices measurable, and the median over many batches
  // shrugs off preemption spikes.
  const uint32_t batch = std::min<uint32_t>(16, repetitions);
  const uint32_t batches = std::max<uint32_t>(1, repetitions / batch);
  auto median_of = [&](auto&& op) {
    std::vector<double> samples;
    samples.reserve(batches);
    for (uint32_t b = 0; b < batches; b++) {
      uint64_t t0 = now_ns();
      for (uint32_t r = 0; r < batch; r++) op();
      samples.push_back(double(now_ns() - t0) / batch);
    }
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
  };

  std::vector<LatencyEstimate> out;
  for (uint64_t size : sizes) {
    if (size == 0) fail(Errc::bad_argument, "microbench sample size must be > 0");
    Handle region = tier.alloc(size);
    std::vector<std::byte> buf(size, std::byte{0x5a});

    LatencyEstimate est;
    est.size = size;
    est.write_ns = std::max(1.0, median_of([&] { tier.write(region, 0, buf); }));
    est.read_ns = std::max(1.0, median_of([&] { tier.read(region, 0, buf); }));
    tier.release(region, size);
    out.push_back(est);
  }
  return out;
}

double interpolate_latency(const std::vector<LatencyEstimate>& table, double size, bool write) {
  if (table.empty()) fail(Errc::bad_argument, "empty latency table");
  auto value = [&](const LatencyEstimate& e) { return write ? e.write_ns : e.read_ns; };
  if (size <= static_cast<double>(table.front().size)) return value(table.front());
  if (size >= static_cast<double>(table.back().size)) return value(table.back());
  for (size_t i = 1; i < table.size(); i++) {
    double lo = static_cast<double>(table[i - 1].size);
    double hi = static_cast<double>(table[i].size);
    if (size <= hi) {
      double alpha = (size - lo) / (hi - lo);
      return value(table[i - 1]) * (1 - alpha) + value(table[i]) * alpha;
    }
  }
  return value(table.back());
}

// ---------------------------------------------------------------------------
// ProfileSession.

ProfileSession::ProfileSession(const ObjectSchema& schema) : schema_(schema) {
  for (const FieldSpec& f : schema_.fields) cells_[f.name];  // F = 0 rows for unseen fields
}

void ProfileSession::record(std::string_view field, std::string_view device, uint64_t bytes,
                            uint64_t ns) {
  std::lock_guard lk(mu_);
  Cell& cell = cells_[std::string(field)][std::string(device)];
  cell.count++;
  cell.ns_sum += static_cast<double>(ns);
  cell.bytes_sum += bytes;
}

void ProfileSession::set_failure_prob(std::string_view device, double p) {
  if (p < 0 || p > 1) fail(Errc::bad_argument, "failure probability must be in [0,1]");
  std::lock_guard lk(mu_);
  failure_prob_[std::string(device)] = p;
}

void ProfileSession::set_recompute(std::string_view field, std::string_view device, double ns) {
  if (ns < 0) fail(Errc::bad_argument, "recompute time must be >= 0");
  std::lock_guard lk(mu_);
  recompute_[{std::string(field), std::string(device)}] = ns;
}

uint64_t ProfileSession::access_count(std::string_view field) const {
  std::lock_guard lk(mu_);
  auto it = cells_.find(field);
  if (it == cells_.end()) return 0;
  uint64_t total = 0;
  for (const auto& [device, cell] : it->second) total += cell.count;
  return total;
}

Profile ProfileSession::finish(TierSet& tiers, std::span<const uint64_t> bench_sizes,
                               uint32_t repetitions) {
  std::lock_guard lk(mu_);
  Profile p;

  std::vector<std::vector<LatencyEstimate>> bench(tiers.count());
  for (size_t j = 0; j < tiers.count(); j++)
    bench[j] = microbench_device(tiers.tier(static_cast<TierIndex>(j)), bench_sizes, repetitions);

  for (size_t j = 0; j < tiers.count(); j++) {
    const TierAllocator& t = tiers.tier(static_cast<TierIndex>(j));
    DeviceProfile d;
    d.name = t.name();
    d.capacity = t.capacity();
    auto it = failure_prob_.find(d.name);
    d.failure_prob = it != failure_prob_.end() ? it->second : 0.0;
    p.devices.push_back(std::move(d));
  }

  for (const FieldSpec& f : schema_.fields) {
    FieldProfile fp;
    fp.name = f.name;
    const auto& per_device = cells_[f.name];
    uint64_t count = 0, byte_sum = 0;
    for (const auto& [device, cell] : per_device) {
      count += cell.count;
      byte_sum += cell.bytes_sum;
    }
    fp.accesses = count;
    if (is_variable(f.kind)) {
      fp.bytes = count > 0 ? std::max(1.0, double(byte_sum) / double(count)) : 1.0;
    } else {
      fp.bytes = fixed_width(f.kind);
    }
    p.fields.push_back(std::move(fp));
  }

  p.access_ns.assign(p.n() * p.m(), 0);
  p.recompute_ns.assign(p.n() * p.m(), 0);
  for (size_t i = 0; i < p.n(); i++) {
    const auto& per_device = cells_[p.fields[i].name];
    for (size_t j = 0; j < p.m(); j++) {
      const std::string& device = p.devices[j].name;
      auto it = per_device.find(device);
      if (it != per_device.end() && it->second.count > 0) {
        p.c(i, j) = it->second.ns_sum / double(it->second.count);
      } else {
        // Unobserved pair: estimate one access of B_i bytes on this device.
        double rd = interpolate_latency(bench[j], p.fields[i].bytes, false);
        double wr = interpolate_latency(bench[j], p.fields[i].bytes, true);
        p.c(i, j) = (rd + wr) / 2;
      }
      if (p.c(i, j) <= 0) p.c(i, j) = 1;  // C must stay positive
      auto rit = recompute_.find({p.fields[i].name, device});
      p.r(i, j) = rit != recompute_.end() ? rit->second : 0.0;
    }
  }
  return p;
}

}  // namespace strata
