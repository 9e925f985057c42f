#include <random>

#include "doctest.h"
#include "strata/placement.hpp"

using namespace strata;

namespace {

// n fields x m devices with everything defaulted to benign values.
PlacementProblem blank(size_t n, size_t m) {
  PlacementProblem p;
  for (size_t i = 0; i < n; i++) {
    p.fields.push_back("f" + std::to_string(i));
    p.access_freq.push_back(1);
    p.field_bytes.push_back(8);
  }
  for (size_t j = 0; j < m; j++) {
    p.devices.push_back("d" + std::to_string(j));
    p.capacity.push_back(1e12);
    p.failure_prob.push_back(0);
  }
  p.access_ns.assign(n * m, 1);
  p.recompute_ns.assign(n * m, 0);
  return p;
}

// Two fields (1 and 10 iterations) over DRAM at 0.1 us and pmem at 1 us,
// 1% failure, recompute on the volatile device growing 100 us per iteration,
// constant 10 us on the durable one.
PlacementProblem iteration_instance(double iters_f1, double iters_f2) {
  PlacementProblem p = blank(2, 2);
  p.fields = {"field1", "field2"};
  p.devices = {"dram", "pmem"};
  p.access_freq = {iters_f1, iters_f2};
  p.failure_prob = {0.01, 0.01};
  p.c(0, 0) = 100;  p.c(0, 1) = 1000;
  p.c(1, 0) = 100;  p.c(1, 1) = 1000;
  p.r(0, 0) = iters_f1 * 100'000;  p.r(0, 1) = 10'000;
  p.r(1, 0) = iters_f2 * 100'000;  p.r(1, 1) = 10'000;
  return p;
}

PlacementProblem random_instance(std::mt19937_64& rng, size_t max_fields = 6,
                                 size_t max_devices = 4) {
  size_t n = 1 + rng() % max_fields;
  size_t m = 1 + rng() % max_devices;
  PlacementProblem p = blank(n, m);
  std::uniform_real_distribution<double> cost(1, 1000);
  std::uniform_real_distribution<double> prob(0, 0.2);
  for (size_t i = 0; i < n; i++) {
    p.access_freq[i] = double(rng() % 100);
    p.field_bytes[i] = 1 + double(rng() % 64);
  }
  p.objects = 1 + rng() % 100;
  for (size_t j = 0; j < m; j++) {
    p.failure_prob[j] = prob(rng);
    // Capacities tight enough that the constraint often binds and some
    // instances come out infeasible.
    p.capacity[j] = 1 + double(rng() % 8000);
  }
  for (size_t i = 0; i < n; i++)
    for (size_t j = 0; j < m; j++) {
      p.c(i, j) = cost(rng);
      p.r(i, j) = rng() % 3 == 0 ? 0 : cost(rng) * 10;
    }
  return p;
}

}  // namespace

TEST_CASE("objective sums the two cost terms") {
  PlacementProblem p = blank(1, 1);
  p.access_freq = {1};
  p.c(0, 0) = 5;
  std::vector<int> a = {0};
  CHECK(objective(p, a) == 5);

  // Failure term vanishes at P = 0 regardless of R.
  p.r(0, 0) = 1e9;
  CHECK(objective(p, a) == 5);

  std::vector<int> bad = {1};
  CHECK_THROWS_AS(objective(p, bad), Error);
}

TEST_CASE("the worked two-device example prices both branches") {
  // Field 2 at 10 iterations: A costs 10*0.1us + 10*1000us*0.01 = 101 us,
  // B costs 10*1us + 10*10us*0.01 = 11 us.
  PlacementProblem p = iteration_instance(1, 10);
  std::vector<int> on_a = {0, 0};
  std::vector<int> on_b = {0, 1};
  double only_field2_a = p.field_cost(1, 0);
  double only_field2_b = p.field_cost(1, 1);
  CHECK(only_field2_a == doctest::Approx(101'000).epsilon(1e-12));
  CHECK(only_field2_b == doctest::Approx(11'000).epsilon(1e-12));
  CHECK(objective(p, on_a) > objective(p, on_b));

  // Against the enumeration oracle.
  PlacementSolution oracle = brute_force(p);
  CHECK(oracle.device_of[1] == 1);  // the durable device wins for field 2
  PlacementSolution solved = solve(p);
  CHECK(solved.device_of == oracle.device_of);
  CHECK(solved.objective == oracle.objective);
}

TEST_CASE("with P = 0 and ample capacity every field takes its cheapest device") {
  std::mt19937_64 rng(5);
  PlacementProblem p = blank(5, 3);
  for (size_t i = 0; i < 5; i++)
    for (size_t j = 0; j < 3; j++) p.c(i, j) = 1 + double(rng() % 500);
  PlacementSolution s = solve(p);
  for (size_t i = 0; i < 5; i++) {
    size_t argmin = 0;
    for (size_t j = 1; j < 3; j++)
      if (p.c(i, j) < p.c(i, argmin)) argmin = j;
    CHECK(static_cast<size_t>(s.device_of[i]) == argmin);
  }
}

TEST_CASE("capacity forces the lower-frequency field off the fast device") {
  // X=10, B=[8,8], S=[100, 1e6]; device A cheaper for both, but only one
  // field fits A (10*16 = 160 > 100). The higher-F field should take A.
  PlacementProblem p = blank(2, 2);
  p.objects = 10;
  p.access_freq = {9, 3};
  p.capacity = {100, 1e6};
  p.c(0, 0) = 10; p.c(0, 1) = 100;
  p.c(1, 0) = 10; p.c(1, 1) = 100;
  PlacementSolution s = brute_force(p);
  CHECK(s.device_of[0] == 0);
  CHECK(s.device_of[1] == 1);
  CHECK(solve(p).device_of == s.device_of);
  CHECK(s.device_load[0] == 80);
  CHECK(s.device_load[1] == 80);
}

TEST_CASE("solve matches brute force on random instances") {
  std::mt19937_64 rng(2024);
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 250; trial++) {
    PlacementProblem p = random_instance(rng);
    bool solve_feasible = true, brute_feasible = true;
    PlacementSolution a, b;
    try {
      a = solve(p);
    } catch (const Error& e) {
      REQUIRE(e.code() == Errc::infeasible);
      solve_feasible = false;
    }
    try {
      b = brute_force(p);
    } catch (const Error& e) {
      REQUIRE(e.code() == Errc::infeasible);
      brute_feasible = false;
    }
    REQUIRE(solve_feasible == brute_feasible);
    if (!solve_feasible) {
      infeasible++;
      continue;
    }
    solved++;
    CHECK(a.objective == b.objective);  // exact, not approximate
    CHECK(a.device_of == b.device_of);  // same tie-break rule

    // Feasibility of the returned solution.
    std::vector<double> load(p.m(), 0);
    for (size_t i = 0; i < p.n(); i++) {
      CHECK(a.device_of[i] >= 0);
      load[static_cast<size_t>(a.device_of[i])] += double(p.objects) * p.field_bytes[i];
    }
    for (size_t j = 0; j < p.m(); j++) CHECK(load[j] <= p.capacity[j]);
  }
  // The generator must exercise both outcomes.
  CHECK(solved > 50);
  CHECK(infeasible > 5);
}

TEST_CASE("six fields by four devices agrees with the oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; trial++) {
    PlacementProblem p = blank(6, 4);
    for (size_t i = 0; i < 6; i++) {
      p.access_freq[i] = double(rng() % 50);
      for (size_t j = 0; j < 4; j++) {
        p.c(i, j) = 1 + double(rng() % 900);
        p.r(i, j) = double(rng() % 10000);
      }
    }
    for (size_t j = 0; j < 4; j++) p.failure_prob[j] = double(rng() % 100) / 1000.0;
    CHECK(solve(p).objective == brute_force(p).objective);
  }
}

TEST_CASE("infeasible instances are reported with the binding constraint") {
  PlacementProblem p = blank(2, 2);
  p.objects = 100;
  p.field_bytes = {8, 8};
  p.capacity = {100, 100};  // 800 needed per field
  try {
    solve(p);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::infeasible);
    CHECK(std::string(e.what()).find("800") != std::string::npos);
  }
  CHECK_THROWS_AS(brute_force(p), Error);
}

TEST_CASE("brute force refuses oversized instances") {
  PlacementProblem p = blank(30, 4);  // 4^30 assignments
  CHECK_THROWS_AS(brute_force(p), Error);
}

TEST_CASE("argmin is invariant under scaling C and R") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; trial++) {
    PlacementProblem p = random_instance(rng);
    PlacementSolution base;
    try {
      base = solve(p);
    } catch (const Error&) {
      continue;
    }
    for (double scale : {0.001, 3.0, 1e6}) {
      PlacementProblem q = p;
      for (double& v : q.access_ns) v *= scale;
      for (double& v : q.recompute_ns) v *= scale;
      PlacementSolution s = solve(q);
      CHECK(s.device_of == base.device_of);
      CHECK(s.objective == doctest::Approx(base.objective * scale));
    }
  }
}

TEST_CASE("raising R for the chosen device never attracts a field to it") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 40; trial++) {
    PlacementProblem p = blank(3, 3);
    for (size_t i = 0; i < 3; i++)
      for (size_t j = 0; j < 3; j++) {
        p.c(i, j) = 1 + double(rng() % 100);
        p.r(i, j) = double(rng() % 1000);
      }
    for (size_t j = 0; j < 3; j++) p.failure_prob[j] = 0.05;
    PlacementSolution before = solve(p);
    size_t field = rng() % 3;
    for (size_t j = 0; j < 3; j++) {
      if (static_cast<int>(j) == before.device_of[field]) continue;
      PlacementProblem q = p;
      q.r(field, j) += 1e6;  // device j only got worse for this field
      PlacementSolution after = solve(q);
      CHECK(after.device_of[field] != static_cast<int>(j));
    }
  }
}

TEST_CASE("sweeping R of the chosen device flips the choice exactly once") {
  PlacementProblem base = iteration_instance(1, 10);
  base.failure_prob = {0.01, 0.01};
  AxisSpec axis1;
  axis1.kind = AxisSpec::Kind::RecomputeCell;
  axis1.field = 1;
  axis1.device = 0;
  for (double v = 0; v <= 2e6; v += 50'000) axis1.values.push_back(v);
  AxisSpec axis2;  // degenerate second axis
  axis2.kind = AxisSpec::Kind::FailureProb;
  axis2.device = 0;
  axis2.values = {0.01};

  auto grid = sweep(base, axis1, axis2);
  int flips = 0;
  for (size_t i = 1; i < grid.size(); i++) {
    REQUIRE(grid[i].feasible);
    if (grid[i].device_of[1] != grid[i - 1].device_of[1]) flips++;
  }
  CHECK(flips == 1);
  CHECK(grid.front().device_of[1] == 0);
  CHECK(grid.back().device_of[1] == 1);

  // The crossover matches the closed-form equality of the two branches:
  // F*C_A + F*R*P = F*C_B + F*R_B*P  =>  R* = (C_B - C_A + P*R_B) / P.
  double r_star = (base.c(1, 1) - base.c(1, 0) + 0.01 * base.r(1, 1)) / 0.01;
  for (size_t i = 1; i < grid.size(); i++) {
    if (grid[i].device_of[1] != grid[i - 1].device_of[1]) {
      CHECK(grid[i - 1].a1 <= r_star);
      CHECK(grid[i].a1 >= r_star - 50'000);
    }
  }
}

TEST_CASE("a P = 0 row picks the min-C device everywhere") {
  PlacementProblem base = iteration_instance(1, 10);
  AxisSpec axis1;
  axis1.kind = AxisSpec::Kind::Iterations;
  axis1.field = 1;
  axis1.volatile_device = 0;
  axis1.per_iteration_ns = 100'000;
  axis1.values = {1, 5, 10, 20};
  AxisSpec axis2;
  axis2.kind = AxisSpec::Kind::FailureProb;
  axis2.device = 0;
  axis2.values = {0.0};
  // Zero out the durable device's P too so no failure term survives anywhere.
  base.failure_prob = {0.0, 0.0};

  auto grid = sweep(base, axis1, axis2);
  for (const SweepCell& cell : grid) {
    REQUIRE(cell.feasible);
    CHECK(cell.device_of[1] == 0);  // dram has the lower C
  }
}

TEST_CASE("axis specs parse the documented mini-language") {
  PlacementProblem base = iteration_instance(1, 10);
  AxisSpec r = AxisSpec::parse("R:field2:dram:0..1000:250", base);
  CHECK(r.kind == AxisSpec::Kind::RecomputeCell);
  CHECK(r.field == 1);
  CHECK(r.device == 0);
  CHECK(r.values == std::vector<double>{0, 250, 500, 750, 1000});

  AxisSpec p = AxisSpec::parse("P:pmem:0.0,0.01,0.1", base);
  CHECK(p.kind == AxisSpec::Kind::FailureProb);
  CHECK(p.device == 1);
  CHECK(p.values.size() == 3);

  AxisSpec it = AxisSpec::parse("iters:field1:dram:100000:0..20", base);
  CHECK(it.kind == AxisSpec::Kind::Iterations);
  CHECK(it.values.size() == 21);

  CHECK_THROWS_AS(AxisSpec::parse("Q:field1:0..1", base), Error);
  CHECK_THROWS_AS(AxisSpec::parse("R:nosuch:dram:0..1", base), Error);
}

TEST_CASE("emit_tags writes one tag per field and round-trips") {
  ObjectSchema schema = parse_schema(
      "object person {\n"
      "  age:   i32    @pmem\n"
      "  image: bytes  @pmem @disk\n"
      "  place: string @pmem\n"
      "  name:  string @pmem\n"
      "}");
  PlacementProblem p = blank(4, 3);
  p.fields = {"age", "image", "place", "name"};
  p.devices = {"dram", "pmem", "disk"};

  SUBCASE("all-pmem solution tags everything @pmem") {
    PlacementSolution s;
    s.device_of = {1, 1, 1, 1};
    std::string text = emit_tags(p, s, schema);
    ObjectSchema parsed = parse_schema(text);
    for (const FieldSpec& f : parsed.fields) CHECK(f.tags == std::vector<std::string>{"pmem"});
  }

  SUBCASE("image-on-disk solution round-trips through parse and layout") {
    PlacementSolution s;
    s.device_of = {1, 2, 1, 1};
    std::string text = emit_tags(p, s, schema);
    ObjectSchema parsed = parse_schema(text);
    CHECK(parsed.fields[1].tags == std::vector<std::string>{"disk"});
    LayoutPlan plan = compute_layout(parsed, first_tag_assignment(parsed));
    CHECK(plan.entries[0].tier == "pmem");
    CHECK(plan.entries[1].tier == "disk");
    CHECK(plan.record_size == 28);
  }

  SUBCASE("field name mismatch is an error") {
    PlacementProblem q = p;
    q.fields[0] = "years";
    PlacementSolution s;
    s.device_of = {1, 1, 1, 1};
    CHECK_THROWS_AS(emit_tags(q, s, schema), Error);
  }
}
