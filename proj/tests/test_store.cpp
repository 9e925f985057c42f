#include <fstream>
#include <map>
#include <random>
#include <thread>

#include "doctest.h"
#include "strata/store.hpp"
#include "test_util.hpp"

using namespace strata;
using strata::test::TempDir;

namespace {

const char kPerson[] =
    "object person {\n"
    "  age:   i32    @pmem\n"
    "  image: bytes  @disk\n"
    "  place: string @pmem\n"
    "  name:  string @pmem\n"
    "}\n";

Store open_person_store(const TempDir& dir, uint64_t pmem_cap = 1 << 20,
                        uint64_t disk_cap = 8 << 20) {
  ObjectSchema schema = parse_schema(kPerson);
  LayoutPlan layout = compute_layout(schema, first_tag_assignment(schema));
  TierSet tiers = TierSet::open(strata::test::small_tiers(dir.path(), 1 << 20, pmem_cap, disk_cap));
  return Store(std::move(tiers), std::move(schema), std::move(layout));
}

std::vector<std::byte> random_bytes(std::mt19937_64& rng, size_t n) {
  std::vector<std::byte> out(n);
  for (auto& b : out) b = static_cast<std::byte>(rng());
  return out;
}

}  // namespace

TEST_CASE("objects are 28-byte records on the pmem tier") {
  TempDir dir("store-create");
  Store store = open_person_store(dir);
  CHECK(store.layout().record_size == 28);

  uint64_t used0 = store.tiers().tier(std::string_view("pmem")).usage().used;
  ObjectRef a = store.create_object();
  CHECK(a.root.tier() == store.record_tier());
  CHECK(store.tiers().tier(std::string_view("pmem")).usage().used == used0 + 28);

  ObjectRef b = store.create_object();
  CHECK(a.root != b.root);
  CHECK(b.root.offset() >= a.root.offset() + 28);  // non-overlapping
}

TEST_CASE("create fails once the record tier is full") {
  TempDir dir("store-full");
  Store store = open_person_store(dir, /*pmem_cap=*/1024);
  store.tiers().tier(std::string_view("pmem")).alloc(1024 - 28);
  store.create_object();  // exactly fits
  CHECK_THROWS_AS(store.create_object(), Error);
}

TEST_CASE("field set/get follows the generated-accessor semantics") {
  TempDir dir("store-fields");
  Store store = open_person_store(dir);
  ObjectRef p = store.create_object();

  store.set_field(p, "age", Value(int32_t{10}));
  CHECK(std::get<int32_t>(*store.get_field(p, "age")) == 10);

  store.set_field(p, "name", Value(std::string("BOB")));
  CHECK(std::get<std::string>(*store.get_field(p, "name")) == "BOB");

  store.set_field(p, "place", Value(std::string("USA")));
  CHECK(std::get<std::string>(*store.get_field(p, "place")) == "USA");

  // Unset variable field reads as a distinguishable null, not as empty.
  CHECK_FALSE(store.get_field(p, "image").has_value());
  store.set_field(p, "image", Value(std::vector<std::byte>{}));
  REQUIRE(store.get_field(p, "image").has_value());
  CHECK(std::get<std::vector<std::byte>>(*store.get_field(p, "image")).empty());

  // The image payload lands on its tagged tier (disk), handle inline on pmem.
  std::mt19937_64 rng(5);
  auto image = random_bytes(rng, 10'000);
  store.set_field(p, "image", Value(image));
  CHECK(std::get<std::vector<std::byte>>(*store.get_field(p, "image")) == image);
  CHECK(store.tiers().tier(std::string_view("disk")).usage().used >= 10'000);

  CHECK_THROWS_AS(store.set_field(p, "age", Value(std::string("nope"))), Error);
  try {
    store.set_field(p, "age", Value(int64_t{1}));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kind_mismatch);
  }
  CHECK_THROWS_AS(store.get_field(p, "ghost"), Error);
}

TEST_CASE("read-your-writes over random operation sequences") {
  TempDir dir("store-ryw");
  Store store = open_person_store(dir);
  std::mt19937_64 rng(23);

  std::vector<ObjectRef> objs;
  for (int i = 0; i < 4; i++) objs.push_back(store.create_object());
  std::map<std::pair<uint64_t, std::string>, Value> model;

  const std::string fields[] = {"age", "image", "place", "name"};
  for (int op = 0; op < 600; op++) {
    ObjectRef obj = objs[rng() % objs.size()];
    const std::string& field = fields[rng() % 4];
    bool write = rng() % 2 == 0;
    if (write) {
      Value v;
      if (field == "age") {
        v = Value(static_cast<int32_t>(rng()));
      } else if (field == "image") {
        v = Value(random_bytes(rng, rng() % 200));
      } else {
        v = Value(std::string("s") + std::to_string(rng() % 100000));
      }
      store.set_field(obj, field, v);
      model[{obj.root.raw(), field}] = v;
    } else {
      auto got = store.get_field(obj, field);
      auto it = model.find({obj.root.raw(), field});
      if (it == model.end()) {
        if (field == "age") {
          CHECK(std::get<int32_t>(*got) == 0);  // zeroed record
        } else {
          CHECK_FALSE(got.has_value());  // never set
        }
      } else {
        REQUIRE(got.has_value());
        CHECK(*got == it->second);
      }
    }
  }
  CHECK(store.placements_respect_tags());
}

TEST_CASE("placement walks the tag preference order") {
  TempDir dir("store-place");
  ObjectSchema schema = parse_schema("object t { blob: bytes @pmem @disk }");
  LayoutPlan layout = compute_layout(schema, first_tag_assignment(schema));
  TierSet tiers = TierSet::open(strata::test::small_tiers(dir.path(), 1 << 16, 4096, 1 << 20));
  Store store(std::move(tiers), std::move(schema), std::move(layout));

  // pmem has space: first preference wins.
  CHECK(store.place_field(0, 100) == 1);

  ObjectRef obj = store.create_object();  // 8-byte record, also on pmem

  // Fill pmem to fewer than the 108 bytes the buffer needs; the fallback tag
  // (disk) takes over, deterministically.
  store.tiers().tier(std::string_view("pmem")).alloc(4096 - 8 - 100);
  CHECK(store.place_field(0, 100) == 2);
  CHECK(store.place_field(0, 100) == 2);

  store.set_field(obj, "blob", Value(std::vector<std::byte>(100)));
  auto v = store.get_field(obj, "blob");
  CHECK(std::get<std::vector<std::byte>>(*v).size() == 100);
  CHECK(store.placements_respect_tags());
}

TEST_CASE("single-tag field on a full tier reports every tier full") {
  TempDir dir("store-alltiers");
  ObjectSchema schema = parse_schema("object t { blob: bytes @disk }");
  LayoutPlan layout = compute_layout(schema, first_tag_assignment(schema));
  TierSet tiers = TierSet::open(strata::test::small_tiers(dir.path(), 1 << 16, 1 << 16, 4096));
  Store store(std::move(tiers), std::move(schema), std::move(layout));
  store.tiers().tier(std::string_view("disk")).alloc(4096);
  try {
    store.place_field(0, 100);
    FAIL("expected all_tiers_full");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::all_tiers_full);
  }
}

TEST_CASE("demotion and promotion move the payload without changing the value") {
  TempDir dir("store-move");
  ObjectSchema schema = parse_schema("object t { pic: bytes @pmem @disk\n flag: i32 @pmem }");
  LayoutPlan layout = compute_layout(schema, first_tag_assignment(schema));
  TierSet tiers = TierSet::open(strata::test::small_tiers(dir.path(), 1 << 16, 1 << 20, 1 << 20));
  Store s(std::move(tiers), std::move(schema), std::move(layout));

  std::mt19937_64 rng(9);
  auto payload = random_bytes(rng, 2000);
  ObjectRef obj = s.create_object();
  s.set_field(obj, "pic", Value(payload));

  s.demote_field(obj, "pic", "disk");
  CHECK(std::get<std::vector<std::byte>>(*s.get_field(obj, "pic")) == payload);
  CHECK(s.tiers().tier(std::string_view("disk")).usage().used >= 2000);

  s.promote_field(obj, "pic", "pmem");
  CHECK(std::get<std::vector<std::byte>>(*s.get_field(obj, "pic")) == payload);

  try {
    s.demote_field(obj, "pic", "dram");  // dram not in pic's tags
    FAIL("expected tier_not_tagged");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::tier_not_tagged);
  }
  try {
    s.demote_field(obj, "flag", "disk");  // fixed fields move with the record only
    FAIL("expected kind_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kind_mismatch);
  }
  CHECK(s.placements_respect_tags());
}

TEST_CASE("a must-place field evicts multi-tag residents") {
  TempDir dir("store-evict");
  ObjectSchema schema = parse_schema(
      "object t {\n"
      "  must: bytes @pmem\n"
      "  flex: bytes @pmem @disk\n"
      "}");
  LayoutPlan layout = compute_layout(schema, first_tag_assignment(schema));
  // pmem: 16-byte record + exactly one 1 KiB buffer (8 + 1024).
  TierSet tiers = TierSet::open(strata::test::small_tiers(dir.path(), 1 << 16, 16 + 1032, 1 << 20));
  Store store(std::move(tiers), std::move(schema), std::move(layout));

  std::mt19937_64 rng(31);
  auto flex_payload = random_bytes(rng, 1024);
  auto must_payload = random_bytes(rng, 1024);

  ObjectRef obj = store.create_object();
  store.set_field(obj, "flex", Value(flex_payload));
  CHECK(store.tiers().tier(std::string_view("pmem")).usage().used == 16 + 1032);

  SUBCASE("set_field triggers the eviction and then places") {
    store.set_field(obj, "must", Value(must_payload));
    CHECK(std::get<std::vector<std::byte>>(*store.get_field(obj, "must")) == must_payload);
    CHECK(std::get<std::vector<std::byte>>(*store.get_field(obj, "flex")) == flex_payload);
    CHECK(store.metrics().demotions == 1);
    CHECK(store.placements_respect_tags());
  }

  SUBCASE("evict_for reports the demotions it performed") {
    auto demoted = store.evict_for(0, 1032);
    REQUIRE(demoted.size() == 1);
    CHECK(demoted[0].field == "flex");
    CHECK(demoted[0].from == "pmem");
    CHECK(demoted[0].to == "disk");
    // Enough space now: a second call demotes nothing.
    CHECK(store.evict_for(0, 1032).empty());
  }
}

TEST_CASE("eviction fails without multi-tag residents") {
  TempDir dir("store-evict2");
  ObjectSchema schema = parse_schema("object t { a: bytes @pmem\n b: bytes @pmem }");
  LayoutPlan layout = compute_layout(schema, first_tag_assignment(schema));
  TierSet tiers = TierSet::open(strata::test::small_tiers(dir.path(), 1 << 16, 16 + 1032, 1 << 20));
  Store store(std::move(tiers), std::move(schema), std::move(layout));

  ObjectRef obj = store.create_object();
  store.set_field(obj, "a", Value(std::vector<std::byte>(1024)));
  try {
    store.set_field(obj, "b", Value(std::vector<std::byte>(1024)));
    FAIL("expected insufficient_space");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_space);
  }
}

TEST_CASE("get_field materializes exactly the bytes it returns") {
  TempDir dir("store-select");
  Store store = open_person_store(dir);
  std::mt19937_64 rng(41);

  ObjectRef p = store.create_object();
  store.set_field(p, "age", Value(int32_t{33}));
  store.set_field(p, "image", Value(random_bytes(rng, 50'000)));  // large unread payload
  store.set_field(p, "place", Value(std::string("LISBON")));
  store.set_field(p, "name", Value(std::string("AMARA")));

  uint64_t before = store.bytes_materialized();
  store.get_field(p, "age");
  store.get_field(p, "place");
  store.get_field(p, "name");
  uint64_t delta = store.bytes_materialized() - before;
  CHECK(delta == 4 + 6 + 5);  // field width + the two payload sizes; image untouched

  // Growing the unread field must not change the cost of the same reads.
  store.set_field(p, "image", Value(random_bytes(rng, 200'000)));
  before = store.bytes_materialized();
  store.get_field(p, "age");
  store.get_field(p, "place");
  store.get_field(p, "name");
  CHECK(store.bytes_materialized() - before == delta);
}

TEST_CASE("values survive sync and reopen through the manifest") {
  TempDir dir("store-reopen");
  std::ofstream(dir / "person.schema") << kPerson;

  StoreManifest manifest;
  manifest.schema_path = dir / "person.schema";
  manifest.tiers = strata::test::small_tiers(dir.path());
  manifest.save(dir / "store.manifest");

  std::mt19937_64 rng(51);
  auto image = random_bytes(rng, 5000);
  Handle root;
  {
    Store store = Store::open(StoreManifest::load(dir / "store.manifest"));
    ObjectRef p = store.create_object();
    store.set_field(p, "age", Value(int32_t{77}));
    store.set_field(p, "image", Value(image));
    store.set_field(p, "place", Value(std::string("USA")));
    store.set_field(p, "name", Value(std::string("BOB")));
    store.sync();
    root = p.root;
  }
  {
    Store store = Store::open(StoreManifest::load(dir / "store.manifest"));
    ObjectRef p = store.object_at(root);
    CHECK(std::get<int32_t>(*store.get_field(p, "age")) == 77);
    CHECK(std::get<std::vector<std::byte>>(*store.get_field(p, "image")) == image);
    CHECK(std::get<std::string>(*store.get_field(p, "place")) == "USA");
    CHECK(std::get<std::string>(*store.get_field(p, "name")) == "BOB");
  }
}

TEST_CASE("concurrent readers of distinct objects see consistent values") {
  TempDir dir("store-readers");
  Store store = open_person_store(dir, 8 << 20);
  constexpr int kObjects = 64;
  std::vector<ObjectRef> objs;
  for (int i = 0; i < kObjects; i++) {
    ObjectRef p = store.create_object();
    store.set_field(p, "age", Value(int32_t(i)));
    store.set_field(p, "name", Value("n" + std::to_string(i)));
    objs.push_back(p);
  }

  std::atomic<bool> ok{true};
  std::vector<std::thread> readers;
  for (int t = 0; t < 6; t++) {
    readers.emplace_back([&, t] {
      std::mt19937_64 rng(t);
      for (int i = 0; i < 2000; i++) {
        int idx = static_cast<int>(rng() % kObjects);
        auto age = store.get_field(objs[idx], "age");
        auto name = store.get_field(objs[idx], "name");
        if (std::get<int32_t>(*age) != idx ||
            std::get<std::string>(*name) != "n" + std::to_string(idx))
          ok = false;
      }
    });
  }
  // One writer on its own object while the readers run.
  ObjectRef scratch = store.create_object();
  for (int i = 0; i < 2000; i++) store.set_field(scratch, "age", Value(int32_t(i)));
  for (auto& r : readers) r.join();
  CHECK(ok);
}

TEST_CASE("metrics dump as counter,value CSV") {
  TempDir dir("store-metrics");
  Store store = open_person_store(dir);
  ObjectRef p = store.create_object();
  store.set_field(p, "name", Value(std::string("EVE")));
  store.get_field(p, "name");

  StoreMetrics m = store.metrics();
  CHECK(m.bytes_materialized == 3);
  std::string csv = m.to_csv();
  CHECK(csv.find("counter,value\n") == 0);
  CHECK(csv.find("bytes_materialized,3") != std::string::npos);
  CHECK(csv.find("pmem_used,") != std::string::npos);
}
