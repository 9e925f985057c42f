#include <random>

#include "doctest.h"
#include "strata/schema.hpp"

using namespace strata;

namespace {

const char kPerson[] =
    "object person {\n"
    "  age:   i32    @pmem\n"
    "  image: bytes  @disk\n"
    "  place: string @pmem\n"
    "  name:  string @pmem\n"
    "}\n";

}  // namespace

TEST_CASE("single-field schema parses") {
  ObjectSchema s = parse_schema("object p { age: i32 @pmem }");
  REQUIRE(s.name == "p");
  REQUIRE(s.fields.size() == 1);
  CHECK(s.fields[0].name == "age");
  CHECK(s.fields[0].kind == FieldKind::I32);
  CHECK(s.fields[0].tags == std::vector<std::string>{"pmem"});
}

TEST_CASE("person schema parses with image on disk") {
  ObjectSchema s = parse_schema(kPerson);
  REQUIRE(s.fields.size() == 4);
  CHECK(s.fields[0].name == "age");
  CHECK(s.fields[1].name == "image");
  CHECK(s.fields[1].kind == FieldKind::Bytes);
  CHECK(s.fields[1].tags == std::vector<std::string>{"disk"});
  CHECK(s.fields[2].kind == FieldKind::String);
  CHECK(s.fields[3].tags == std::vector<std::string>{"pmem"});
}

TEST_CASE("compact field separators are accepted") {
  ObjectSchema s = parse_schema(
      "object person{age:i32@pmem, image:bytes@disk; place:string@pmem, name:string@pmem}");
  REQUIRE(s.fields.size() == 4);
  CHECK(s.fields[1].tags == std::vector<std::string>{"disk"});
}

TEST_CASE("comments are skipped") {
  ObjectSchema s = parse_schema("# header\nobject p { # inline\n  x: i64 @dram @pmem\n}\n");
  REQUIRE(s.fields.size() == 1);
  CHECK(s.fields[0].tags == (std::vector<std::string>{"dram", "pmem"}));
}

TEST_CASE("parse errors carry category and location") {
  CHECK_THROWS_WITH_AS(parse_schema("object p { x: i32 @foo }"),
                       doctest::Contains("unknown tier tag '@foo'"), Error);
  try {
    parse_schema("object p { x: i32 @foo }");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unknown_tier);
  }

  CHECK_THROWS_AS(parse_schema("object p { x: i32 @pmem x: i64 @pmem }"), Error);
  try {
    parse_schema("object p { x: i32 @pmem x: i64 @pmem }");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_field);
  }

  try {
    parse_schema("object p { x: i32 }");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_tags);
  }

  try {
    parse_schema("object p { x: i32 @pmem @pmem }");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_tag);
  }

  // Syntax errors report line and column.
  try {
    parse_schema("object p {\n  x i32 @pmem\n}");
    FAIL("expected a syntax error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::syntax_error);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("layout matches the generated accessor offsets") {
  ObjectSchema s = parse_schema(kPerson);
  LayoutPlan plan = compute_layout(s, first_tag_assignment(s));
  REQUIRE(plan.entries.size() == 4);
  CHECK(plan.entries[0].offset == 0);   // age
  CHECK(plan.entries[0].width == 4);
  CHECK(plan.entries[1].offset == 4);   // image handle
  CHECK(plan.entries[1].width == 8);
  CHECK(plan.entries[2].offset == 12);  // place handle
  CHECK(plan.entries[3].offset == 20);  // name handle
  CHECK(plan.record_size == 28);
  CHECK(plan.record_tier == "pmem");
}

TEST_CASE("fixed-width arithmetic") {
  ObjectSchema s = parse_schema("object p { a: i64 @pmem  b: i32 @pmem }");
  LayoutPlan plan = compute_layout(s, first_tag_assignment(s));
  CHECK(plan.entries[0].offset == 0);
  CHECK(plan.entries[1].offset == 8);
  CHECK(plan.record_size == 12);
}

TEST_CASE("layout validates the assignment") {
  ObjectSchema s = parse_schema("object p { a: i64 @pmem  b: bytes @disk }");
  FieldAssignment missing{{"a", "pmem"}};
  CHECK_THROWS_AS(compute_layout(s, missing), Error);

  FieldAssignment wrong{{"a", "pmem"}, {"b", "pmem"}};  // pmem not in b's tags
  try {
    compute_layout(s, wrong);
    FAIL("expected tier_not_tagged");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::tier_not_tagged);
  }
}

TEST_CASE("layout determinism and offset consistency over random schemas") {
  std::mt19937_64 rng(7);
  const FieldKind kinds[] = {FieldKind::I16, FieldKind::I32, FieldKind::I64,
                             FieldKind::F32, FieldKind::F64, FieldKind::Bytes,
                             FieldKind::String};
  for (int trial = 0; trial < 50; trial++) {
    ObjectSchema s;
    s.name = "t" + std::to_string(trial);
    size_t nfields = 1 + rng() % 8;
    for (size_t i = 0; i < nfields; i++) {
      FieldSpec f;
      f.name = "f" + std::to_string(i);
      f.kind = kinds[rng() % 7];
      f.tags = {default_tier_names()[rng() % 3]};
      if (rng() % 2) {
        std::string extra = default_tier_names()[rng() % 3];
        if (extra != f.tags[0]) f.tags.push_back(extra);
      }
      s.fields.push_back(f);
    }
    auto assignment = first_tag_assignment(s);
    LayoutPlan a = compute_layout(s, assignment);
    LayoutPlan b = compute_layout(s, assignment);

    // Determinism: identical inputs give identical plans.
    REQUIRE(a.entries.size() == b.entries.size());
    CHECK(a.record_size == b.record_size);
    CHECK(a.record_tier == b.record_tier);
    for (size_t i = 0; i < a.entries.size(); i++) {
      CHECK(a.entries[i].offset == b.entries[i].offset);
      CHECK(a.entries[i].tier == b.entries[i].tier);
    }

    // Offsets are contiguous; variable kinds store 8 bytes regardless.
    uint32_t expect = 0;
    for (const LayoutEntry& e : a.entries) {
      CHECK(e.offset == expect);
      if (is_variable(e.kind)) CHECK(e.width == 8);
      expect += e.width;
    }
    CHECK(a.record_size == expect);
  }
}

TEST_CASE("render round-trips through the parser") {
  ObjectSchema s = parse_schema(kPerson);
  ObjectSchema again = parse_schema(render_schema(s));
  REQUIRE(again.fields.size() == s.fields.size());
  for (size_t i = 0; i < s.fields.size(); i++) {
    CHECK(again.fields[i].name == s.fields[i].name);
    CHECK(again.fields[i].kind == s.fields[i].kind);
    CHECK(again.fields[i].tags == s.fields[i].tags);
  }
}
