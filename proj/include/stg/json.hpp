#pragma once

// Minimal JSON reader that keeps the source position of every value and key,
// plus a canonical writer. Integers only carry exact int64 values; any other
// number is kept as raw text so callers can reject it with a precise span.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stg::json {

struct Span {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t offset = 0;
  bool operator==(const Span &) const = default;
};

struct Member;

struct Value {
  enum class Type { Null, Bool, Integer, Real, String, Array, Object };

  Type type = Type::Null;
  Span span;
  bool boolean = false;
  std::int64_t integer = 0;
  std::string text;  // string contents, or the raw token of a Real
  std::vector<Value> array;
  std::vector<Member> object;

  const Value *get(std::string_view key) const;
  const Member *member(std::string_view key) const;

  static Value make_null() { return {}; }
  static Value make_bool(bool b);
  static Value make_int(std::int64_t v);
  static Value make_string(std::string s);
  static Value make_array();
  static Value make_object();
  Value &push(Value v);
  Value &set(std::string key, Value v);
};

struct Member {
  std::string key;
  Span key_span;
  Value value;
};

struct SyntaxError : std::runtime_error {
  SyntaxError(Span where, const std::string &message) : std::runtime_error(message), span(where) {}
  Span span;
};

/// Parses a complete document. Throws SyntaxError at the first malformed token.
Value parse(std::string_view text);

/// Canonical rendering: two-space indentation, members in stored order, arrays
/// of scalars on one line, trailing newline.
std::string dump(const Value &value);

std::string_view type_name(Value::Type type);

} // namespace stg::json
