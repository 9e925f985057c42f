#pragma once
// Object schemas: the field DSL, tier tags, and the packed record layout.
//
// A schema file looks like
//
//   # people indexed by a search service
//   object person {
//     age:   i32    @pmem
//     image: bytes  @disk
//     place: string @pmem
//     name:  string @pmem
//   }
//
// Fixed-width kinds are stored inline in the record; bytes/string are stored
// through an 8-byte handle to a separately allocated buffer. Records are
// packed (no padding) and every scalar is little-endian on the medium.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "strata/common.hpp"

namespace strata {

enum class FieldKind : uint8_t { I16, I32, I64, F32, F64, Bytes, String };

const char* kind_name(FieldKind k);
FieldKind kind_from_name(std::string_view name);  // throws syntax_error

inline bool is_variable(FieldKind k) { return k == FieldKind::Bytes || k == FieldKind::String; }

// Width of the value itself; 0 for variable kinds.
inline uint32_t fixed_width(FieldKind k) {
  switch (k) {
    case FieldKind::I16: return 2;
    case FieldKind::I32: return 4;
    case FieldKind::I64: return 8;
    case FieldKind::F32: return 4;
    case FieldKind::F64: return 8;
    case FieldKind::Bytes:
    case FieldKind::String: return 0;
  }
  return 0;
}

// Bytes the field occupies inside the record: its width, or 8 for the handle
// of a variable-size field.
inline uint32_t stored_width(FieldKind k) { return is_variable(k) ? 8 : fixed_width(k); }

struct FieldSpec {
  std::string name;
  FieldKind kind;
  std::vector<std::string> tags;  // tier names, preference order, non-empty
};

struct ObjectSchema {
  std::string name;
  std::vector<FieldSpec> fields;  // declaration order == layout order

  int index_of(std::string_view field) const;        // -1 if absent
  const FieldSpec& field(std::string_view f) const;  // throws missing_field
};

// Tier names recognized by default, index order == tier id order.
const std::vector<std::string>& default_tier_names();

ObjectSchema parse_schema(std::string_view text,
                          const std::vector<std::string>& known_tiers = default_tier_names());

// Renders a schema back to DSL text; parse_schema(render_schema(s)) == s.
std::string render_schema(const ObjectSchema& schema);

// field name -> tier name
using FieldAssignment = std::map<std::string, std::string, std::less<>>;

// The default assignment: every field on its first-preference tag.
FieldAssignment first_tag_assignment(const ObjectSchema& schema);

struct LayoutEntry {
  std::string field;
  FieldKind kind;
  uint32_t offset;  // byte offset inside the record
  uint32_t width;   // stored width (8 for variable kinds)
  std::string tier; // assigned home tier for the field's payload
};

struct LayoutPlan {
  std::vector<LayoutEntry> entries;  // schema order
  uint32_t record_size = 0;
  std::string record_tier;           // where the inline record region lives

  int index_of(std::string_view field) const;
};

// Packs fields in declaration order with no padding. The record region goes
// to the most-preferred tier (lowest id) named by any field's first tag,
// defaulting to pmem for an empty schema.
LayoutPlan compute_layout(const ObjectSchema& schema, const FieldAssignment& assignment,
                          const std::vector<std::string>& known_tiers = default_tier_names());

}  // namespace strata
