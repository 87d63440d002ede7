#include "ledgerflow/canon.hpp"

#include <charconv>
#include <cstdio>

#include "ledgerflow/error.hpp"

namespace ledgerflow::canon {

std::int64_t Value::as_int() const {
  if (!is_int()) throw Error(Errc::ParseError, "value is not an integer");
  return std::get<std::int64_t>(data_);
}

const std::string& Value::as_string() const {
  if (!is_string()) throw Error(Errc::ParseError, "value is not a string");
  return std::get<std::string>(data_);
}

const Value::List& Value::as_list() const {
  if (!is_list()) throw Error(Errc::ParseError, "value is not a list");
  return std::get<List>(data_);
}

const Value::Object& Value::as_object() const {
  if (!is_object()) throw Error(Errc::ParseError, "value is not an object");
  return std::get<Object>(data_);
}

Value::List& Value::list() {
  if (!is_list()) throw Error(Errc::ParseError, "value is not a list");
  return std::get<List>(data_);
}

Value::Object& Value::object() {
  if (!is_object()) throw Error(Errc::ParseError, "value is not an object");
  return std::get<Object>(data_);
}

const Value& Value::at(const std::string& key) const {
  const Value* v = find(key);
  if (v == nullptr) {
    throw Error(Errc::ParseError, "missing field \"" + key + "\"");
  }
  return *v;
}

const Value* Value::find(const std::string& key) const {
  const Object& obj = as_object();
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &it->second;
}

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

void emit_string(const std::string& s, std::string& out) {
  if (!is_valid_utf8(s)) {
    throw Error(Errc::SerializationError, "string is not valid UTF-8");
  }
  out.push_back('"');
  for (char c : s) {
    const auto b = static_cast<std::uint8_t>(c);
    if (c == '"') {
      out += "\\\"";
    } else if (c == '\\') {
      out += "\\\\";
    } else if (b < 0x20) {
      out += "\\u00";
      out.push_back(kHexDigits[b >> 4]);
      out.push_back(kHexDigits[b & 0x0f]);
    } else {
      out.push_back(c);
    }
  }
  out.push_back('"');
}

void emit(const Value& value, std::string& out) {
  if (value.is_int()) {
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value.as_int());
    out.append(buf, end);
  } else if (value.is_string()) {
    emit_string(value.as_string(), out);
  } else if (value.is_list()) {
    out.push_back('[');
    bool first = true;
    for (const Value& item : value.as_list()) {
      if (!first) out.push_back(',');
      first = false;
      emit(item, out);
    }
    out.push_back(']');
  } else {
    out.push_back('{');
    bool first = true;
    for (const auto& [key, item] : value.as_object()) {
      if (!first) out.push_back(',');
      first = false;
      emit_string(key, out);
      out.push_back(':');
      emit(item, out);
    }
    out.push_back('}');
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Value run() {
    Value v = parse_value();
    if (pos_ != text_.size()) {
      fail("trailing input after value");
    }
    return v;
  }

 private:
  static constexpr int kMaxDepth = 64;

  [[noreturn]] void fail(const std::string& what) {
    throw Error(Errc::ParseError, what + " at offset " + std::to_string(pos_));
  }

  char peek() {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    return text_[pos_];
  }

  char take() {
    char c = peek();
    ++pos_;
    return c;
  }

  void expect(char c) {
    if (take() != c) {
      --pos_;
      fail(std::string("expected '") + c + "'");
    }
  }

  Value parse_value() {
    if (depth_ >= kMaxDepth) fail("nesting too deep");
    char c = peek();
    if (c == '{') return parse_object();
    if (c == '[') return parse_list();
    if (c == '"') return Value(parse_string());
    if (c == '-' || (c >= '0' && c <= '9')) return parse_int();
    fail("unexpected character");
  }

  Value parse_int() {
    const std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    const std::size_t digits_start = pos_;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      ++pos_;
    }
    if (pos_ == digits_start) fail("expected digits");
    const std::size_t ndigits = pos_ - digits_start;
    if (ndigits > 1 && text_[digits_start] == '0') fail("leading zero");
    if (ndigits == 1 && text_[digits_start] == '0' && start != digits_start) {
      fail("negative zero");
    }
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, out);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      fail("integer out of range");
    }
    return Value(out);
  }

  int hex_nibble_strict(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    fail("expected lowercase hex digit");
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      char c = take();
      if (c == '"') break;
      if (c == '\\') {
        char e = take();
        if (e == '"') {
          out.push_back('"');
        } else if (e == '\\') {
          out.push_back('\\');
        } else if (e == 'u') {
          int cp = 0;
          for (int k = 0; k < 4; ++k) cp = (cp << 4) | hex_nibble_strict(take());
          if (cp >= 0x20) fail("non-canonical \\u escape");
          out.push_back(static_cast<char>(cp));
        } else {
          --pos_;
          fail("unsupported escape");
        }
      } else if (static_cast<std::uint8_t>(c) < 0x20) {
        --pos_;
        fail("unescaped control character");
      } else {
        out.push_back(c);
      }
    }
    if (!is_valid_utf8(out)) fail("string is not valid UTF-8");
    return out;
  }

  Value parse_list() {
    ++depth_;
    expect('[');
    Value::List items;
    if (peek() == ']') {
      ++pos_;
      --depth_;
      return Value(std::move(items));
    }
    while (true) {
      items.push_back(parse_value());
      char c = take();
      if (c == ']') break;
      if (c != ',') {
        --pos_;
        fail("expected ',' or ']'");
      }
    }
    --depth_;
    return Value(std::move(items));
  }

  Value parse_object() {
    ++depth_;
    expect('{');
    Value::Object fields;
    if (peek() == '}') {
      ++pos_;
      --depth_;
      return Value(std::move(fields));
    }
    std::string prev_key;
    bool have_prev = false;
    while (true) {
      std::string key = parse_string();
      if (have_prev && !(prev_key < key)) {
        fail("object keys not in strictly ascending order");
      }
      expect(':');
      Value v = parse_value();
      fields.emplace(key, std::move(v));
      prev_key = std::move(key);
      have_prev = true;
      char c = take();
      if (c == '}') break;
      if (c != ',') {
        --pos_;
        fail("expected ',' or '}'");
      }
    }
    --depth_;
    return Value(std::move(fields));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

std::string serialize(const Value& value) {
  std::string out;
  emit(value, out);
  return out;
}

Value parse(std::string_view text) { return Parser(text).run(); }

}  // namespace ledgerflow::canon
