#include "strata/schema.hpp"

#include <algorithm>
#include <set>

#include "strata/common.hpp"

namespace strata {

const char* kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::I16: return "i16";
    case FieldKind::I32: return "i32";
    case FieldKind::I64: return "i64";
    case FieldKind::F32: return "f32";
    case FieldKind::F64: return "f64";
    case FieldKind::Bytes: return "bytes";
    case FieldKind::String: return "string";
  }
  return "?";
}

FieldKind kind_from_name(std::string_view name) {
  if (name == "i16") return FieldKind::I16;
  if (name == "i32") return FieldKind::I32;
  if (name == "i64") return FieldKind::I64;
  if (name == "f32") return FieldKind::F32;
  if (name == "f64") return FieldKind::F64;
  if (name == "bytes") return FieldKind::Bytes;
  if (name == "string") return FieldKind::String;
  fail(Errc::syntax_error, "unknown field kind '" + std::string(name) + "'");
}

int ObjectSchema::index_of(std::string_view f) const {
  for (size_t i = 0; i < fields.size(); i++)
    if (fields[i].name == f) return static_cast<int>(i);
  return -1;
}

const FieldSpec& ObjectSchema::field(std::string_view f) const {
  int i = index_of(f);
  if (i < 0) fail(Errc::missing_field, "no field '" + std::string(f) + "' in schema " + name);
  return fields[static_cast<size_t>(i)];
}

const std::vector<std::string>& default_tier_names() {
  static const std::vector<std::string> names = {"dram", "pmem", "disk"};
  return names;
}

namespace {

struct Token {
  enum class Type { Ident, Tag, Colon, LBrace, RBrace, Separator, End } type;
  std::string text;
  int line;
  int col;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_ws_and_comments();
    int line = line_, col = col_;
    if (pos_ >= src_.size()) return {Token::Type::End, "", line, col};
    char c = src_[pos_];
    if (c == '{') { advance(); return {Token::Type::LBrace, "{", line, col}; }
    if (c == '}') { advance(); return {Token::Type::RBrace, "}", line, col}; }
    if (c == ':') { advance(); return {Token::Type::Colon, ":", line, col}; }
    if (c == ',' || c == ';') { advance(); return {Token::Type::Separator, std::string(1, c), line, col}; }
    if (c == '@') {
      advance();
      std::string word = read_word();
      if (word.empty()) fail_at(line, col, "'@' must be followed by a tier name");
      return {Token::Type::Tag, word, line, col};
    }
    if (is_word_char(c)) return {Token::Type::Ident, read_word(), line, col};
    fail_at(line, col, std::string("unexpected character '") + c + "'");
  }

  [[noreturn]] static void fail_at(int line, int col, const std::string& msg) {
    fail(Errc::syntax_error,
         "line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg);
  }

 private:
  static bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      line_++;
      col_ = 1;
    } else {
      col_++;
    }
    pos_++;
  }

  void skip_ws_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  std::string read_word() {
    std::string w;
    while (pos_ < src_.size() && is_word_char(src_[pos_])) {
      w += src_[pos_];
      advance();
    }
    return w;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

ObjectSchema parse_schema(std::string_view text, const std::vector<std::string>& known_tiers) {
  Lexer lex(text);
  auto expect = [&](Token::Type t, const char* what) {
    Token tok = lex.next();
    if (tok.type != t) Lexer::fail_at(tok.line, tok.col, std::string("expected ") + what);
    return tok;
  };

  Token kw = expect(Token::Type::Ident, "'object'");
  if (kw.text != "object") Lexer::fail_at(kw.line, kw.col, "expected 'object'");
  Token name = expect(Token::Type::Ident, "object name");
  expect(Token::Type::LBrace, "'{'");

  ObjectSchema schema;
  schema.name = name.text;
  std::set<std::string> seen;

  Token tok = lex.next();
  while (tok.type != Token::Type::RBrace) {
    if (tok.type != Token::Type::Ident)
      Lexer::fail_at(tok.line, tok.col, "expected field name or '}'");
    FieldSpec field;
    field.name = tok.text;
    if (!seen.insert(field.name).second)
      fail(Errc::duplicate_field, "field '" + field.name + "' declared twice");
    expect(Token::Type::Colon, "':'");
    Token kind = expect(Token::Type::Ident, "field kind");
    field.kind = kind_from_name(kind.text);

    tok = lex.next();
    while (tok.type == Token::Type::Tag) {
      if (std::find(known_tiers.begin(), known_tiers.end(), tok.text) == known_tiers.end())
        fail(Errc::unknown_tier, "field '" + field.name + "': unknown tier tag '@" + tok.text + "'");
      if (std::find(field.tags.begin(), field.tags.end(), tok.text) != field.tags.end())
        fail(Errc::duplicate_tag, "field '" + field.name + "': duplicate tag '@" + tok.text + "'");
      field.tags.push_back(tok.text);
      tok = lex.next();
    }
    if (field.tags.empty())
      fail(Errc::empty_tags, "field '" + field.name + "' has no tier tags");
    schema.fields.push_back(std::move(field));

    if (tok.type == Token::Type::Separator) tok = lex.next();
  }

  Token end = lex.next();
  if (end.type != Token::Type::End)
    Lexer::fail_at(end.line, end.col, "trailing input after '}'");
  return schema;
}

std::string render_schema(const ObjectSchema& schema) {
  std::string out = "object " + schema.name + " {\n";
  for (const FieldSpec& f : schema.fields) {
    out += "  " + f.name + ": " + kind_name(f.kind);
    for (const std::string& t : f.tags) out += " @" + t;
    out += "\n";
  }
  out += "}\n";
  return out;
}

FieldAssignment first_tag_assignment(const ObjectSchema& schema) {
  FieldAssignment a;
  for (const FieldSpec& f : schema.fields) a[f.name] = f.tags.front();
  return a;
}

int LayoutPlan::index_of(std::string_view field) const {
  for (size_t i = 0; i < entries.size(); i++)
    if (entries[i].field == field) return static_cast<int>(i);
  return -1;
}

LayoutPlan compute_layout(const ObjectSchema& schema, const FieldAssignment& assignment,
                          const std::vector<std::string>& known_tiers) {
  auto tier_index = [&](const std::string& name) -> size_t {
    auto it = std::find(known_tiers.begin(), known_tiers.end(), name);
    if (it == known_tiers.end()) fail(Errc::unknown_tier, "unknown tier '" + name + "'");
    return static_cast<size_t>(it - known_tiers.begin());
  };

  LayoutPlan plan;
  uint32_t offset = 0;
  size_t best_first = known_tiers.size();
  for (const FieldSpec& f : schema.fields) {
    auto it = assignment.find(f.name);
    if (it == assignment.end())
      fail(Errc::missing_field, "assignment does not cover field '" + f.name + "'");
    const std::string& tier = it->second;
    if (std::find(f.tags.begin(), f.tags.end(), tier) == f.tags.end())
      fail(Errc::tier_not_tagged,
           "field '" + f.name + "' assigned to '" + tier + "' which is not in its tag list");
    uint32_t width = stored_width(f.kind);
    plan.entries.push_back({f.name, f.kind, offset, width, tier});
    offset += width;
    best_first = std::min(best_first, tier_index(f.tags.front()));
  }
  plan.record_size = offset;
  if (best_first < known_tiers.size()) {
    plan.record_tier = known_tiers[best_first];
  } else {
    plan.record_tier = "pmem";  // empty schema; nothing better to pick
  }
  return plan;
}

}  // namespace strata
