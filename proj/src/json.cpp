#include "stg/json.hpp"

#include <charconv>
#include <cstdio>

namespace stg::json {

const Member *Value::member(std::string_view key) const {
  for (const auto &m : object) {
    if (m.key == key) {
      return &m;
    }
  }
  return nullptr;
}

const Value *Value::get(std::string_view key) const {
  const auto *m = member(key);
  return m ? &m->value : nullptr;
}

Value Value::make_bool(bool b) {
  Value v;
  v.type = Type::Bool;
  v.boolean = b;
  return v;
}

Value Value::make_int(std::int64_t i) {
  Value v;
  v.type = Type::Integer;
  v.integer = i;
  return v;
}

Value Value::make_string(std::string s) {
  Value v;
  v.type = Type::String;
  v.text = std::move(s);
  return v;
}

Value Value::make_array() {
  Value v;
  v.type = Type::Array;
  return v;
}

Value Value::make_object() {
  Value v;
  v.type = Type::Object;
  return v;
}

Value &Value::push(Value v) {
  array.push_back(std::move(v));
  return array.back();
}

Value &Value::set(std::string key, Value v) {
  object.push_back(Member{std::move(key), {}, std::move(v)});
  return object.back().value;
}

std::string_view type_name(Value::Type type) {
  switch (type) {
  case Value::Type::Null:
    return "null";
  case Value::Type::Bool:
    return "boolean";
  case Value::Type::Integer:
    return "integer";
  case Value::Type::Real:
    return "non-integer number";
  case Value::Type::String:
    return "string";
  case Value::Type::Array:
    return "array";
  case Value::Type::Object:
    return "object";
  }
  return "value";
}

namespace {

constexpr int kMaxDepth = 200;

class Reader {
public:
  explicit Reader(std::string_view text) : m_text(text) {}

  Value document() {
    skip_ws();
    Value v = value(0);
    skip_ws();
    if (m_pos != m_text.size()) {
      fail("unexpected trailing content");
    }
    return v;
  }

private:
  std::string_view m_text;
  std::size_t m_pos = 0;
  std::size_t m_line = 1;
  std::size_t m_line_start = 0;

  Span here() const { return Span{m_line, m_pos - m_line_start + 1, m_pos}; }

  [[noreturn]] void fail(const std::string &message) const { throw SyntaxError(here(), message); }

  bool at_end() const { return m_pos >= m_text.size(); }
  char peek() const { return at_end() ? '\0' : m_text[m_pos]; }

  void advance() {
    if (m_text[m_pos] == '\n') {
      ++m_line;
      m_line_start = m_pos + 1;
    }
    ++m_pos;
  }

  void skip_ws() {
    while (!at_end()) {
      char c = m_text[m_pos];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    if (peek() != c) {
      fail(std::string("expected '") + c + "'");
    }
    advance();
  }

  void literal(std::string_view word) {
    if (m_text.substr(m_pos, word.size()) != word) {
      fail("invalid literal");
    }
    for (std::size_t i = 0; i < word.size(); ++i) {
      advance();
    }
  }

  Value value(int depth) {
    if (depth > kMaxDepth) {
      fail("nesting too deep");
    }
    Value v;
    v.span = here();
    switch (peek()) {
    case '{':
      v.type = Value::Type::Object;
      parse_object(v, depth);
      break;
    case '[':
      v.type = Value::Type::Array;
      parse_array(v, depth);
      break;
    case '"':
      v.type = Value::Type::String;
      v.text = string();
      break;
    case 't':
      literal("true");
      v.type = Value::Type::Bool;
      v.boolean = true;
      break;
    case 'f':
      literal("false");
      v.type = Value::Type::Bool;
      break;
    case 'n':
      literal("null");
      break;
    default:
      if (peek() == '-' || (peek() >= '0' && peek() <= '9')) {
        number(v);
      } else if (at_end()) {
        fail("unexpected end of document");
      } else {
        fail("unexpected character");
      }
    }
    return v;
  }

  void parse_object(Value &v, int depth) {
    advance();
    skip_ws();
    if (peek() == '}') {
      advance();
      return;
    }
    while (true) {
      skip_ws();
      if (peek() != '"') {
        fail("expected member name");
      }
      Member m;
      m.key_span = here();
      m.key = string();
      skip_ws();
      expect(':');
      skip_ws();
      m.value = value(depth + 1);
      v.object.push_back(std::move(m));
      skip_ws();
      if (peek() == ',') {
        advance();
        continue;
      }
      expect('}');
      return;
    }
  }

  void parse_array(Value &v, int depth) {
    advance();
    skip_ws();
    if (peek() == ']') {
      advance();
      return;
    }
    while (true) {
      skip_ws();
      v.array.push_back(value(depth + 1));
      skip_ws();
      if (peek() == ',') {
        advance();
        continue;
      }
      expect(']');
      return;
    }
  }

  static void append_utf8(std::string &out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::uint32_t hex4() {
    std::uint32_t cp = 0;
    for (int i = 0; i < 4; ++i) {
      char c = peek();
      cp <<= 4;
      if (c >= '0' && c <= '9') {
        cp |= static_cast<std::uint32_t>(c - '0');
      } else if (c >= 'a' && c <= 'f') {
        cp |= static_cast<std::uint32_t>(c - 'a' + 10);
      } else if (c >= 'A' && c <= 'F') {
        cp |= static_cast<std::uint32_t>(c - 'A' + 10);
      } else {
        fail("invalid unicode escape");
      }
      advance();
    }
    return cp;
  }

  std::string string() {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (at_end()) {
        fail("unterminated string");
      }
      char c = peek();
      if (c == '"') {
        advance();
        return out;
      }
      if (static_cast<unsigned char>(c) < 0x20) {
        fail("control character in string");
      }
      if (c != '\\') {
        out += c;
        advance();
        continue;
      }
      advance();
      char e = peek();
      if (at_end()) {
        fail("unterminated escape");
      }
      advance();
      switch (e) {
      case '"':
        out += '"';
        break;
      case '\\':
        out += '\\';
        break;
      case '/':
        out += '/';
        break;
      case 'b':
        out += '\b';
        break;
      case 'f':
        out += '\f';
        break;
      case 'n':
        out += '\n';
        break;
      case 'r':
        out += '\r';
        break;
      case 't':
        out += '\t';
        break;
      case 'u': {
        std::uint32_t cp = hex4();
        if (cp >= 0xD800 && cp <= 0xDBFF) {
          if (peek() != '\\') {
            fail("unpaired surrogate");
          }
          advance();
          if (peek() != 'u') {
            fail("unpaired surrogate");
          }
          advance();
          std::uint32_t lo = hex4();
          if (lo < 0xDC00 || lo > 0xDFFF) {
            fail("invalid surrogate pair");
          }
          cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
        } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
          fail("unpaired surrogate");
        }
        append_utf8(out, cp);
        break;
      }
      default:
        fail("invalid escape");
      }
    }
  }

  void number(Value &v) {
    std::size_t start = m_pos;
    if (peek() == '-') {
      advance();
    }
    if (!(peek() >= '0' && peek() <= '9')) {
      fail("malformed number");
    }
    if (peek() == '0') {
      advance();
    } else {
      while (peek() >= '0' && peek() <= '9') {
        advance();
      }
    }
    bool real = false;
    if (peek() == '.') {
      real = true;
      advance();
      if (!(peek() >= '0' && peek() <= '9')) {
        fail("malformed number");
      }
      while (peek() >= '0' && peek() <= '9') {
        advance();
      }
    }
    if (peek() == 'e' || peek() == 'E') {
      real = true;
      advance();
      if (peek() == '+' || peek() == '-') {
        advance();
      }
      if (!(peek() >= '0' && peek() <= '9')) {
        fail("malformed number");
      }
      while (peek() >= '0' && peek() <= '9') {
        advance();
      }
    }
    std::string_view token = m_text.substr(start, m_pos - start);
    if (real) {
      v.type = Value::Type::Real;
      v.text = std::string(token);
      return;
    }
    v.type = Value::Type::Integer;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v.integer);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw SyntaxError(v.span, "integer out of range");
    }
  }
};

void escape(std::string &out, const std::string &s) {
  out += '"';
  for (char c : s) {
    switch (c) {
    case '"':
      out += "\\\"";
      break;
    case '\\':
      out += "\\\\";
      break;
    case '\n':
      out += "\\n";
      break;
    case '\r':
      out += "\\r";
      break;
    case '\t':
      out += "\\t";
      break;
    default:
      if (static_cast<unsigned char>(c) < 0x20) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(static_cast<unsigned char>(c)));
        out += buf;
      } else {
        out += c;
      }
    }
  }
  out += '"';
}

bool is_scalar(const Value &v) { return v.type != Value::Type::Array && v.type != Value::Type::Object; }

void write(std::string &out, const Value &v, int indent) {
  auto pad = [&](int n) { out.append(static_cast<std::size_t>(n) * 2, ' '); };
  switch (v.type) {
  case Value::Type::Null:
    out += "null";
    return;
  case Value::Type::Bool:
    out += v.boolean ? "true" : "false";
    return;
  case Value::Type::Integer:
    out += std::to_string(v.integer);
    return;
  case Value::Type::Real:
    out += v.text;
    return;
  case Value::Type::String:
    escape(out, v.text);
    return;
  case Value::Type::Array: {
    if (v.array.empty()) {
      out += "[]";
      return;
    }
    bool flat = true;
    for (const auto &e : v.array) {
      flat = flat && is_scalar(e);
    }
    if (flat) {
      out += '[';
      for (std::size_t i = 0; i < v.array.size(); ++i) {
        if (i) {
          out += ", ";
        }
        write(out, v.array[i], indent);
      }
      out += ']';
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < v.array.size(); ++i) {
      pad(indent + 1);
      write(out, v.array[i], indent + 1);
      out += (i + 1 < v.array.size()) ? ",\n" : "\n";
    }
    pad(indent);
    out += ']';
    return;
  }
  case Value::Type::Object: {
    if (v.object.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    for (std::size_t i = 0; i < v.object.size(); ++i) {
      pad(indent + 1);
      escape(out, v.object[i].key);
      out += ": ";
      write(out, v.object[i].value, indent + 1);
      out += (i + 1 < v.object.size()) ? ",\n" : "\n";
    }
    pad(indent);
    out += '}';
    return;
  }
  }
}

} // namespace

Value parse(std::string_view text) { return Reader(text).document(); }

std::string dump(const Value &value) {
  std::string out;
  write(out, value, 0);
  out += '\n';
  return out;
}

} // namespace stg::json
