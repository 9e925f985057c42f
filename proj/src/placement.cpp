#include "strata/placement.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace strata {

namespace fs = std::filesystem;

double PlacementProblem::field_cost(size_t i, size_t j) const {
  return access_freq[i] * c(i, j) + access_freq[i] * r(i, j) * failure_prob[j];
}

void PlacementProblem::validate() const {
  size_t nn = n(), mm = m();
  if (nn == 0 || mm == 0) fail(Errc::bad_argument, "placement problem needs fields and devices");
  if (access_freq.size() != nn || field_bytes.size() != nn)
    fail(Errc::bad_argument, "F/B dimension mismatch");
  if (capacity.size() != mm || failure_prob.size() != mm)
    fail(Errc::bad_argument, "S/P dimension mismatch");
  if (access_ns.size() != nn * mm || recompute_ns.size() != nn * mm)
    fail(Errc::bad_argument, "C/R dimension mismatch");
  if (objects < 1) fail(Errc::bad_argument, "X must be >= 1");
  for (size_t i = 0; i < nn; i++) {
    if (field_bytes[i] <= 0) fail(Errc::bad_argument, "B must be > 0");
    if (access_freq[i] < 0) fail(Errc::bad_argument, "F must be >= 0");
  }
  for (size_t j = 0; j < mm; j++) {
    if (capacity[j] <= 0) fail(Errc::bad_argument, "S must be > 0");
    if (failure_prob[j] < 0 || failure_prob[j] > 1)
      fail(Errc::bad_argument, "P must be in [0,1]");
  }
}

PlacementProblem PlacementProblem::from_profile(const Profile& profile, uint64_t objects) {
  PlacementProblem p;
  for (const FieldProfile& f : profile.fields) {
    p.fields.push_back(f.name);
    p.access_freq.push_back(static_cast<double>(f.accesses));
    p.field_bytes.push_back(f.bytes);
  }
  for (const DeviceProfile& d : profile.devices) {
    p.devices.push_back(d.name);
    p.capacity.push_back(static_cast<double>(d.capacity));
    p.failure_prob.push_back(d.failure_prob);
  }
  p.access_ns = profile.access_ns;
  p.recompute_ns = profile.recompute_ns;
  p.objects = objects;
  p.validate();
  return p;
}

double objective(const PlacementProblem& p, std::span<const int> device_of) {
  if (device_of.size() != p.n()) fail(Errc::bad_argument, "assignment length != field count");
  double total = 0;
  for (size_t i = 0; i < p.n(); i++) {
    int j = device_of[i];
    if (j < 0 || static_cast<size_t>(j) >= p.m())
      fail(Errc::bad_argument, "assignment names device out of range");
    total += p.field_cost(i, static_cast<size_t>(j));
  }
  return total;
}

static PlacementSolution package(const PlacementProblem& p, std::vector<int> device_of) {
  PlacementSolution s;
  s.device_of = std::move(device_of);
  s.objective = objective(p, s.device_of);
  s.device_load.assign(p.m(), 0);
  for (size_t i = 0; i < p.n(); i++)
    s.device_load[static_cast<size_t>(s.device_of[i])] +=
        static_cast<double>(p.objects) * p.field_bytes[i];
  return s;
}

[[noreturn]] static void report_infeasible(const PlacementProblem& p) {
  // Name the binding constraint as concretely as we can: either a field that
  // fits nowhere on its own, or the total demand against the largest device.
  double max_cap = *std::max_element(p.capacity.begin(), p.capacity.end());
  for (size_t i = 0; i < p.n(); i++) {
    double demand = static_cast<double>(p.objects) * p.field_bytes[i];
    if (demand > max_cap)
      fail(Errc::infeasible, "field '" + p.fields[i] + "' needs X*B = " +
                                 std::to_string(demand) + " bytes; largest capacity is " +
                                 std::to_string(max_cap));
  }
  double total = 0, cap_sum = 0;
  for (size_t i = 0; i < p.n(); i++) total += static_cast<double>(p.objects) * p.field_bytes[i];
  for (size_t j = 0; j < p.m(); j++) cap_sum += p.capacity[j];
  fail(Errc::infeasible, "no assignment fits: total demand X*sum(B) = " + std::to_string(total) +
                             " bytes vs capacities summing to " + std::to_string(cap_sum));
}

PlacementSolution solve(const PlacementProblem& p) {
  p.validate();
  size_t n = p.n(), m = p.m();

  // Lower bound for the unassigned suffix: capacity-free per-field minima.
  std::vector<double> suffix_min(n + 1, 0);
  for (size_t i = n; i-- > 0;) {
    double best = p.field_cost(i, 0);
    for (size_t j = 1; j < m; j++) best = std::min(best, p.field_cost(i, j));
    suffix_min[i] = suffix_min[i + 1] + best;
  }

  std::vector<int> current(n, -1), best_assign;
  std::vector<double> load(m, 0);
  double best = 0;
  bool found = false;

  // DFS in lexicographic order (devices ascending), strict improvement and
  // bound >= best pruning: the first optimum reached is the lexicographically
  // smallest, matching brute_force exactly.
  auto dfs = [&](auto&& self, size_t i, double cost) -> void {
    if (found && cost + suffix_min[i] >= best) return;
    if (i == n) {
      if (!found || cost < best) {
        best = cost;
        best_assign = current;
        found = true;
      }
      return;
    }
    double demand = static_cast<double>(p.objects) * p.field_bytes[i];
    for (size_t j = 0; j < m; j++) {
      if (load[j] + demand > p.capacity[j]) continue;
      current[i] = static_cast<int>(j);
      load[j] += demand;
      self(self, i + 1, cost + p.field_cost(i, j));
      load[j] -= demand;
      current[i] = -1;
    }
  };
  dfs(dfs, 0, 0);

  if (!found) report_infeasible(p);
  return package(p, std::move(best_assign));
}

PlacementSolution brute_force(const PlacementProblem& p) {
  p.validate();
  size_t n = p.n(), m = p.m();
  double space = std::pow(static_cast<double>(m), static_cast<double>(n));
  if (space > 1e7)
    fail(Errc::too_large, "brute force over " + std::to_string(space) + " assignments");

  std::vector<int> assign(n, 0), best_assign;
  double best = 0;
  bool found = false;

  while (true) {
    bool feasible = true;
    std::vector<double> load(m, 0);
    for (size_t i = 0; i < n && feasible; i++) {
      load[static_cast<size_t>(assign[i])] += static_cast<double>(p.objects) * p.field_bytes[i];
    }
    for (size_t j = 0; j < m && feasible; j++)
      if (load[j] > p.capacity[j]) feasible = false;
    if (feasible) {
      double cost = objective(p, assign);
      if (!found || cost < best) {  // strict: first minimum in lex order wins
        best = cost;
        best_assign = assign;
        found = true;
      }
    }
    // Odometer, most significant digit first == lexicographic order.
    size_t k = n;
    while (k-- > 0) {
      if (++assign[k] < static_cast<int>(m)) break;
      assign[k] = 0;
      if (k == 0) goto done;
    }
    if (n == 0) break;
  }
done:
  if (!found) report_infeasible(p);
  return package(p, std::move(best_assign));
}

// ---------------------------------------------------------------------------
// Sweep.

void apply_axis(PlacementProblem& p, const AxisSpec& axis, double value) {
  switch (axis.kind) {
    case AxisSpec::Kind::AccessCell: p.c(axis.field, axis.device) = value; break;
    case AxisSpec::Kind::RecomputeCell: p.r(axis.field, axis.device) = value; break;
    case AxisSpec::Kind::FailureProb: p.failure_prob[axis.device] = value; break;
    case AxisSpec::Kind::Frequency: p.access_freq[axis.field] = value; break;
    case AxisSpec::Kind::Objects: p.objects = static_cast<uint64_t>(value); break;
    case AxisSpec::Kind::Iterations:
      p.access_freq[axis.field] = value;
      p.r(axis.field, axis.volatile_device) = value * axis.per_iteration_ns;
      break;
  }
}

std::vector<SweepCell> sweep(const PlacementProblem& base, const AxisSpec& axis1,
                             const AxisSpec& axis2) {
  if (axis1.values.empty() || axis2.values.empty())
    fail(Errc::bad_argument, "sweep axes need at least one value");
  std::vector<SweepCell> cells;
  for (double v1 : axis1.values) {
    for (double v2 : axis2.values) {
      PlacementProblem p = base;
      apply_axis(p, axis1, v1);
      apply_axis(p, axis2, v2);
      SweepCell cell;
      cell.a1 = v1;
      cell.a2 = v2;
      try {
        PlacementSolution s = solve(p);
        cell.feasible = true;
        cell.device_of = std::move(s.device_of);
        cell.objective = s.objective;
      } catch (const Error& e) {
        if (e.code() != Errc::infeasible) throw;
        cell.feasible = false;  // marked, not fatal
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

static std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_sweep_csv(const fs::path& path, const PlacementProblem& base,
                     const std::vector<SweepCell>& cells) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write sweep CSV " + path.string());
  out << "axis1,axis2,field,choice,objective\n";
  for (const SweepCell& cell : cells) {
    for (size_t i = 0; i < base.n(); i++) {
      out << fmt_double(cell.a1) << "," << fmt_double(cell.a2) << "," << base.fields[i] << ",";
      if (cell.feasible) {
        out << base.devices[static_cast<size_t>(cell.device_of[i])] << ","
            << fmt_double(cell.objective);
      } else {
        out << "infeasible,";
      }
      out << "\n";
    }
  }
}

void write_solution_csv(const fs::path& path, const PlacementProblem& p,
                        const PlacementSolution& s) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write solution CSV " + path.string());
  out << "field,device,cost_contribution\n";
  for (size_t i = 0; i < p.n(); i++) {
    size_t j = static_cast<size_t>(s.device_of[i]);
    out << p.fields[i] << "," << p.devices[j] << "," << fmt_double(p.field_cost(i, j)) << "\n";
  }
}

std::string emit_tags(const PlacementProblem& p, const PlacementSolution& s,
                      const ObjectSchema& schema) {
  if (s.device_of.size() != p.n()) fail(Errc::bad_argument, "solution does not match problem");
  ObjectSchema tagged;
  tagged.name = schema.name;
  for (const FieldSpec& f : schema.fields) {
    int idx = -1;
    for (size_t i = 0; i < p.n(); i++)
      if (p.fields[i] == f.name) idx = static_cast<int>(i);
    if (idx < 0)
      fail(Errc::missing_field, "schema field '" + f.name + "' absent from the solution");
    FieldSpec out = f;
    out.tags = {p.devices[static_cast<size_t>(s.device_of[static_cast<size_t>(idx)])]};
    tagged.fields.push_back(std::move(out));
  }
  return render_schema(tagged);
}

// ---------------------------------------------------------------------------
// Axis parsing.

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= s.size()) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) pos = s.size();
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

double parse_num(std::string_view s, const std::string& what) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(Errc::bad_argument, "bad number '" + std::string(s) + "' in " + what);
  return v;
}

std::vector<double> parse_range(std::string_view text, const std::string& what) {
  // lo..hi[:step] or comma list
  size_t dots = text.find("..");
  if (dots != std::string_view::npos) {
    double lo = parse_num(text.substr(0, dots), what);
    std::string_view rest = text.substr(dots + 2);
    double step = 1;
    size_t colon = rest.find(':');
    if (colon != std::string_view::npos) {
      step = parse_num(rest.substr(colon + 1), what);
      rest = rest.substr(0, colon);
    }
    double hi = parse_num(rest, what);
    if (step <= 0 || hi < lo) fail(Errc::bad_argument, "bad range in " + what);
    std::vector<double> values;
    for (double v = lo; v <= hi + step * 1e-9; v += step) values.push_back(v);
    return values;
  }
  std::vector<double> values;
  for (const std::string& part : split(text, ','))
    values.push_back(parse_num(part, what));
  return values;
}

size_t field_of(const PlacementProblem& p, const std::string& name) {
  for (size_t i = 0; i < p.n(); i++)
    if (p.fields[i] == name) return i;
  fail(Errc::bad_argument, "axis names unknown field '" + name + "'");
}

size_t device_of_name(const PlacementProblem& p, const std::string& name) {
  for (size_t j = 0; j < p.m(); j++)
    if (p.devices[j] == name) return j;
  fail(Errc::bad_argument, "axis names unknown device '" + name + "'");
}

}  // namespace

AxisSpec AxisSpec::parse(std::string_view text, const PlacementProblem& base) {
  auto parts = split(text, ':');
  if (parts.size() < 2) fail(Errc::bad_argument, "axis spec '" + std::string(text) + "'");
  AxisSpec axis;
  axis.label = std::string(text);
  const std::string& kind = parts[0];
  // The trailing range may itself contain ':' (lo..hi:step).
  auto tail = [&](size_t from) {
    std::string joined;
    for (size_t i = from; i < parts.size(); i++) {
      if (i > from) joined += ':';
      joined += parts[i];
    }
    return joined;
  };
  if (kind == "C" || kind == "R") {
    if (parts.size() < 4) fail(Errc::bad_argument, "axis: " + kind + ":<field>:<device>:<range>");
    axis.kind = kind == "C" ? Kind::AccessCell : Kind::RecomputeCell;
    axis.field = field_of(base, parts[1]);
    axis.device = device_of_name(base, parts[2]);
    axis.values = parse_range(tail(3), "axis range");
  } else if (kind == "P") {
    if (parts.size() < 3) fail(Errc::bad_argument, "axis: P:<device>:<range>");
    axis.kind = Kind::FailureProb;
    axis.device = device_of_name(base, parts[1]);
    axis.values = parse_range(tail(2), "axis range");
  } else if (kind == "F") {
    if (parts.size() < 3) fail(Errc::bad_argument, "axis: F:<field>:<range>");
    axis.kind = Kind::Frequency;
    axis.field = field_of(base, parts[1]);
    axis.values = parse_range(tail(2), "axis range");
  } else if (kind == "X") {
    axis.kind = Kind::Objects;
    axis.values = parse_range(tail(1), "axis range");
  } else if (kind == "iters") {
    if (parts.size() < 5)
      fail(Errc::bad_argument, "axis: iters:<field>:<volatile device>:<per-iteration ns>:<range>");
    axis.kind = Kind::Iterations;
    axis.field = field_of(base, parts[1]);
    axis.volatile_device = device_of_name(base, parts[2]);
    axis.per_iteration_ns = parse_num(parts[3], "per-iteration ns");
    axis.values = parse_range(tail(4), "axis range");
  } else {
    fail(Errc::bad_argument, "axis kind must be C, R, P, F, X or iters");
  }
  if (axis.values.empty()) fail(Errc::bad_argument, "axis has no values");
  return axis;
}

}  // namespace strata
