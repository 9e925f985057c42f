// strata: schema layout inspection, profiling, placement optimization and
// tiered-storage benchmarks from one batch front end.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "strata/collections.hpp"
#include "strata/placement.hpp"
#include "strata/profiling.hpp"
#include "strata/workloads.hpp"

namespace fs = std::filesystem;
using namespace strata;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitCapacity = 4;
constexpr int kExitIo = 5;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::syntax_error:
    case Errc::unknown_tier:
    case Errc::duplicate_field:
    case Errc::duplicate_tag:
    case Errc::empty_tags:
    case Errc::kind_mismatch:
    case Errc::missing_field:
    case Errc::tier_not_tagged:
    case Errc::bad_argument:
    case Errc::too_large:
      return kExitUsage;
    case Errc::infeasible:
      return kExitInfeasible;
    case Errc::capacity_exhausted:
    case Errc::all_tiers_full:
    case Errc::insufficient_space:
    case Errc::capacity_mismatch:
      return kExitCapacity;
    case Errc::io_error:
    case Errc::corrupt_data:
    case Errc::bad_profile:
    case Errc::bad_dataset:
    case Errc::out_of_bounds:
      return kExitIo;
  }
  return kExitError;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  out << text;
}

const char kDemoSchema[] =
    "object person {\n"
    "  age:   i32    @pmem\n"
    "  image: bytes  @disk\n"
    "  place: string @pmem\n"
    "  name:  string @pmem\n"
    "}\n";

struct CommonFlags {
  std::string tiers_path;
  std::string out_dir = ".";
  uint64_t seed = 1;
};

std::vector<TierConfig> resolve_tiers(const CommonFlags& common, const fs::path& fallback_dir) {
  if (!common.tiers_path.empty()) return load_tier_file(common.tiers_path);
  fs::create_directories(fallback_dir);
  return make_bench_tiers(fallback_dir);
}

fs::path out_path(const CommonFlags& common, const std::string& name) {
  fs::create_directories(common.out_dir);
  return fs::path(common.out_dir) / name;
}

// --------------------------------------------------------------------------
// layout <schema>

int cmd_layout(const std::string& schema_path) {
  ObjectSchema schema = parse_schema(read_file(schema_path));
  LayoutPlan plan = compute_layout(schema, first_tag_assignment(schema));
  std::printf("field,kind,offset,width,tier\n");
  for (const LayoutEntry& e : plan.entries)
    std::printf("%s,%s,%u,%u,%s\n", e.field.c_str(), kind_name(e.kind), e.offset, e.width,
                e.tier.c_str());
  std::printf("record_size,%u\n", plan.record_size);
  std::printf("record_tier,%s\n", plan.record_tier.c_str());
  return kExitOk;
}

// --------------------------------------------------------------------------
// Shared bench flags.

struct BenchFlags {
  std::string data;
  std::string mode = "all-pmem";
  std::string schema_path;
  uint32_t threads = 1;
  // kmeans
  uint32_t k = 8;
  uint32_t iters = 10;
  bool gen = false;
  uint64_t gen_n = 100'000;
  uint32_t gen_dims = 12;
  uint32_t gen_blobs = 8;
  // graph
  std::vector<std::string> constraints;
  uint64_t gen_nodes = 10'000;
  uint64_t gen_edges = 0;
  uint32_t gen_features = 4;
  uint32_t gen_feature_width = 12;
  uint64_t gen_payload = 10'000;
  double gen_plant_rate = 0.01;
  std::string snap;
};

void add_bench_flags(CLI::App* cmd, BenchFlags& f, bool kmeans) {
  cmd->add_option("--data", f.data, "dataset file")->required();
  cmd->add_option("--mode", f.mode, "no-pmem | all-pmem | select-pmem");
  cmd->add_option("--schema", f.schema_path, "annotated schema overriding the mode's tags");
  cmd->add_flag("--gen", f.gen, "generate the dataset if the file does not exist");
  if (kmeans) {
    cmd->add_option("--k", f.k, "clusters");
    cmd->add_option("--iters", f.iters, "Lloyd iterations");
    cmd->add_option("--n", f.gen_n, "points to generate");
    cmd->add_option("--dims", f.gen_dims, "dimensions to generate");
    cmd->add_option("--blobs", f.gen_blobs, "generating blob count");
  } else {
    cmd->add_option("--constraint", f.constraints, "feature=value (repeatable)");
    cmd->add_option("--threads", f.threads, "parallel scan threads");
    cmd->add_option("--nodes", f.gen_nodes, "nodes to generate");
    cmd->add_option("--edges", f.gen_edges, "edges to generate");
    cmd->add_option("--features", f.gen_features, "searchable features per node");
    cmd->add_option("--feature-width", f.gen_feature_width, "feature string width");
    cmd->add_option("--payload-bytes", f.gen_payload, "opaque payload size per node");
    cmd->add_option("--plant-rate", f.gen_plant_rate, "fraction of nodes given the planted pair");
    cmd->add_option("--snap", f.snap, "build the dataset from a SNAP edge list");
  }
}

void ensure_dataset(const BenchFlags& f, const CommonFlags& common, bool kmeans) {
  if (fs::exists(f.data)) return;
  if (!f.snap.empty()) {
    GraphSpec spec{f.gen_nodes, f.gen_edges, f.gen_features, f.gen_feature_width,
                   f.gen_payload, f.gen_plant_rate, common.seed};
    gen_graph_from_snap(f.snap, spec, f.data);
    return;
  }
  if (!f.gen) fail(Errc::io_error, "dataset " + f.data + " does not exist (pass --gen to create it)");
  if (kmeans) {
    gen_points({f.gen_n, f.gen_dims, f.gen_blobs, common.seed}, f.data);
  } else {
    gen_graph({f.gen_nodes, f.gen_edges, f.gen_features, f.gen_feature_width, f.gen_payload,
               f.gen_plant_rate, common.seed},
              f.data);
  }
}

std::vector<std::pair<std::string, std::string>> parse_constraints(
    const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& c : raw) {
    size_t eq = c.find('=');
    if (eq == std::string::npos)
      fail(Errc::bad_argument, "constraint '" + c + "' is not feature=value");
    out.emplace_back(c.substr(0, eq), c.substr(eq + 1));
  }
  return out;
}

BenchConfig make_bench_config(const BenchFlags& f, const CommonFlags& common) {
  BenchConfig config;
  config.mode = mode_from_name(f.mode);
  config.tiers = resolve_tiers(common, fs::path(common.out_dir) / "tiers");
  config.threads = f.threads;
  if (!f.schema_path.empty()) config.schema_override = parse_schema(read_file(f.schema_path));
  return config;
}

int cmd_bench(const std::string& workload, const BenchFlags& f, const CommonFlags& common) {
  bool kmeans = workload == "kmeans";
  ensure_dataset(f, common, kmeans);
  BenchConfig config = make_bench_config(f, common);
  BenchReport report;
  if (kmeans) {
    KmeansResult r = run_kmeans(f.data, f.k, f.iters, config);
    report = r.report;
  } else {
    SearchResult r = run_graph_search(f.data, parse_constraints(f.constraints), config);
    report = r.report;
  }
  fs::path out = out_path(common, "report.csv");
  write_file(out, report.to_csv());
  std::printf("%s %s: load %.3f ms, exec %.3f ms, materialized %" PRIu64
              " B, serde %" PRIu64 ", results %" PRIu64 "\n",
              workload.c_str(), f.mode.c_str(), double(report.load_ns) / 1e6,
              double(report.exec_ns) / 1e6, report.bytes_materialized, report.serde_events,
              report.result_count);
  std::printf("report: %s\n", out.string().c_str());
  return kExitOk;
}

// --------------------------------------------------------------------------
// profile bench <workload>

struct ProfileFlags {
  BenchFlags bench;
  std::vector<std::string> failures;    // device=p
  std::vector<std::string> recomputes;  // field:device:ns
  uint32_t reps = 200;
};

int cmd_profile(const std::string& workload, const ProfileFlags& pf, const CommonFlags& common) {
  bool kmeans = workload == "kmeans";
  ensure_dataset(pf.bench, common, kmeans);
  BenchConfig config = make_bench_config(pf.bench, common);

  Dataset ds = Dataset::load(pf.bench.data);
  ProfileSession session(ds.schema);
  config.recorder = &session;

  if (kmeans) {
    run_kmeans(pf.bench.data, pf.bench.k, pf.bench.iters, config);
  } else {
    run_graph_search(pf.bench.data, parse_constraints(pf.bench.constraints), config);
  }

  for (const std::string& s : pf.failures) {
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail(Errc::bad_argument, "--failure needs device=probability");
    session.set_failure_prob(s.substr(0, eq), std::stod(s.substr(eq + 1)));
  }
  for (const std::string& s : pf.recomputes) {
    size_t c1 = s.find(':');
    size_t c2 = c1 == std::string::npos ? std::string::npos : s.find(':', c1 + 1);
    if (c2 == std::string::npos) fail(Errc::bad_argument, "--recompute needs field:device:ns");
    session.set_recompute(s.substr(0, c1), s.substr(c1 + 1, c2 - c1 - 1),
                          std::stod(s.substr(c2 + 1)));
  }

  // Fresh tiers for the microbenchmarks (the run above may have filled them).
  reset_tier_backing(config.tiers);
  TierSet tiers = TierSet::open(config.tiers);
  std::vector<uint64_t> sizes = {8, 64, 1024, 16384};
  Profile profile = session.finish(tiers, sizes, pf.reps);

  fs::path out = out_path(common, "profile.csv");
  profile.save(out);
  std::printf("profile: %s\n", out.string().c_str());
  return kExitOk;
}

// --------------------------------------------------------------------------
// optimize

struct OptimizeFlags {
  std::string profile_path;
  uint64_t objects = 1;
  std::string schema_path;
  std::vector<std::string> capacities;  // device=bytes
};

int cmd_optimize(const OptimizeFlags& of, const CommonFlags& common) {
  Profile profile = Profile::load(of.profile_path);
  PlacementProblem problem = PlacementProblem::from_profile(profile, of.objects);
  for (const std::string& s : of.capacities) {
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail(Errc::bad_argument, "--capacity needs device=bytes");
    std::string device = s.substr(0, eq);
    int j = profile.device_index(device);
    if (j < 0) fail(Errc::bad_argument, "--capacity names unknown device '" + device + "'");
    problem.capacity[static_cast<size_t>(j)] = std::stod(s.substr(eq + 1));
  }

  PlacementSolution solution = solve(problem);
  fs::path sol_path = out_path(common, "solution.csv");
  write_solution_csv(sol_path, problem, solution);
  std::printf("solution: %s (objective %.0f ns)\n", sol_path.string().c_str(),
              solution.objective);

  if (!of.schema_path.empty()) {
    ObjectSchema schema = parse_schema(read_file(of.schema_path));
    std::string tagged = emit_tags(problem, solution, schema);
    fs::path schema_out = out_path(common, "annotated.schema");
    write_file(schema_out, tagged);
    std::printf("annotated schema: %s\n", schema_out.string().c_str());
  }
  return kExitOk;
}

// --------------------------------------------------------------------------
// sweep

struct SweepFlags {
  std::string profile_path;
  uint64_t objects = 1;
  std::string axis1;
  std::string axis2;
};

int cmd_sweep(const SweepFlags& sf, const CommonFlags& common) {
  Profile profile = Profile::load(sf.profile_path);
  PlacementProblem base = PlacementProblem::from_profile(profile, sf.objects);
  AxisSpec a1 = AxisSpec::parse(sf.axis1, base);
  AxisSpec a2 = AxisSpec::parse(sf.axis2, base);
  std::vector<SweepCell> grid = sweep(base, a1, a2);
  fs::path out = out_path(common, "sweep.csv");
  write_sweep_csv(out, base, grid);
  std::printf("sweep: %s (%zu cells)\n", out.string().c_str(), grid.size());
  return kExitOk;
}

// --------------------------------------------------------------------------
// store-demo

int cmd_store_demo(const std::string& schema_path, const CommonFlags& common) {
  fs::path dir = fs::path(common.out_dir) / "demo";
  fs::create_directories(dir);

  fs::path schema_file = dir / "person.schema";
  if (schema_path.empty()) {
    write_file(schema_file, kDemoSchema);
  } else {
    schema_file = schema_path;
  }

  StoreManifest manifest;
  manifest.schema_path = schema_file;
  manifest.tiers = resolve_tiers(common, dir / "tiers");
  manifest.save(dir / "store.manifest");

  Store store = Store::open(manifest);
  const ObjectSchema& schema = store.schema();

  ObjectRef obj = store.create_object();
  for (const FieldSpec& f : schema.fields) {
    switch (f.kind) {
      case FieldKind::I16: store.set_field(obj, f.name, Value(int16_t{10})); break;
      case FieldKind::I32: store.set_field(obj, f.name, Value(int32_t{10})); break;
      case FieldKind::I64: store.set_field(obj, f.name, Value(int64_t{10})); break;
      case FieldKind::F32: store.set_field(obj, f.name, Value(10.0f)); break;
      case FieldKind::F64: store.set_field(obj, f.name, Value(10.0)); break;
      case FieldKind::Bytes:
        store.set_field(obj, f.name, Value(std::vector<std::byte>(1000, std::byte{0x42})));
        break;
      case FieldKind::String:
        store.set_field(obj, f.name, Value(std::string(f.name == "place" ? "USA" : "BOB")));
        break;
    }
  }

  std::printf("schema %s, record %u bytes on %s\n", schema.name.c_str(),
              store.layout().record_size, store.layout().record_tier.c_str());
  for (const FieldSpec& f : schema.fields) {
    auto v = store.get_field(obj, f.name);
    std::string shown;
    if (!v) {
      shown = "<unset>";
    } else if (auto* s = std::get_if<std::string>(&*v)) {
      shown = *s;
    } else if (auto* b = std::get_if<std::vector<std::byte>>(&*v)) {
      shown = std::to_string(b->size()) + " bytes";
    } else if (auto* i32 = std::get_if<int32_t>(&*v)) {
      shown = std::to_string(*i32);
    } else if (auto* i64v = std::get_if<int64_t>(&*v)) {
      shown = std::to_string(*i64v);
    } else if (auto* i16v = std::get_if<int16_t>(&*v)) {
      shown = std::to_string(*i16v);
    } else if (auto* f32v = std::get_if<float>(&*v)) {
      shown = std::to_string(*f32v);
    } else if (auto* f64v = std::get_if<double>(&*v)) {
      shown = std::to_string(*f64v);
    }
    std::printf("  %s = %s\n", f.name.c_str(), shown.c_str());
  }

  store.sync();
  write_file(dir / "metrics.csv", store.metrics().to_csv());
  std::printf("metrics: %s\n", (dir / "metrics.csv").string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strata: field-granular tiered object storage"};
  app.require_subcommand(1);
  app.fallthrough(true);

  CommonFlags common;
  app.add_option("--tiers", common.tiers_path, "tier config file");
  app.add_option("--out", common.out_dir, "output directory");
  app.add_option("--seed", common.seed, "generator seed");

  // layout
  std::string layout_schema;
  CLI::App* layout = app.add_subcommand("layout", "print per-field offsets and tiers");
  layout->add_option("schema", layout_schema, "schema file")->required();

  // profile bench <workload>
  CLI::App* profile = app.add_subcommand("profile", "collect placement inputs");
  CLI::App* profile_bench = profile->add_subcommand("bench", "run an instrumented workload");
  profile_bench->require_subcommand(1);
  ProfileFlags pk, pg;
  CLI::App* profile_kmeans = profile_bench->add_subcommand("kmeans");
  add_bench_flags(profile_kmeans, pk.bench, true);
  profile_kmeans->add_option("--failure", pk.failures, "device=probability (repeatable)");
  profile_kmeans->add_option("--recompute", pk.recomputes, "field:device:ns (repeatable)");
  profile_kmeans->add_option("--reps", pk.reps, "microbenchmark repetitions");
  CLI::App* profile_graph = profile_bench->add_subcommand("graph");
  add_bench_flags(profile_graph, pg.bench, false);
  profile_graph->add_option("--failure", pg.failures, "device=probability (repeatable)");
  profile_graph->add_option("--recompute", pg.recomputes, "field:device:ns (repeatable)");
  profile_graph->add_option("--reps", pg.reps, "microbenchmark repetitions");

  // optimize
  OptimizeFlags of;
  CLI::App* optimize = app.add_subcommand("optimize", "solve the field placement problem");
  optimize->add_option("--profile", of.profile_path, "profile CSV")->required();
  optimize->add_option("--objects", of.objects, "object count X")->required();
  optimize->add_option("--schema", of.schema_path, "schema to re-tag with the solution");
  optimize->add_option("--capacity", of.capacities, "device=bytes override (repeatable)");

  // sweep
  SweepFlags sf;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "solve over a 2-axis parameter grid");
  sweep_cmd->add_option("--profile", sf.profile_path, "profile CSV")->required();
  sweep_cmd->add_option("--objects", sf.objects, "object count X");
  sweep_cmd->add_option("--axis1", sf.axis1, "axis spec")->required();
  sweep_cmd->add_option("--axis2", sf.axis2, "axis spec")->required();

  // bench <workload>
  CLI::App* bench = app.add_subcommand("bench", "run a workload and write a report");
  bench->require_subcommand(1);
  BenchFlags bk, bg;
  CLI::App* bench_kmeans = bench->add_subcommand("kmeans");
  add_bench_flags(bench_kmeans, bk, true);
  CLI::App* bench_graph = bench->add_subcommand("graph");
  add_bench_flags(bench_graph, bg, false);

  // store-demo
  std::string demo_schema;
  CLI::App* demo = app.add_subcommand("store-demo", "end-to-end durable object walkthrough");
  demo->add_option("--schema", demo_schema, "schema file (default: bundled person)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*layout) return cmd_layout(layout_schema);
    if (*profile_kmeans) return cmd_profile("kmeans", pk, common);
    if (*profile_graph) return cmd_profile("graph", pg, common);
    if (*optimize) return cmd_optimize(of, common);
    if (*sweep_cmd) return cmd_sweep(sf, common);
    if (*bench_kmeans) return cmd_bench("kmeans", bk, common);
    if (*bench_graph) return cmd_bench("graph", bg, common);
    if (*demo) return cmd_store_demo(demo_schema, common);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitUsage;
}
