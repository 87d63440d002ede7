#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ledgerflow/bytes.hpp"

namespace ledgerflow::canon {

/// One node of the canonical object notation: integer, string, list, or
/// object with bytewise-sorted unique keys. Byte fields are represented as
/// lowercase-hex strings by the schema layer; the value model does not
/// distinguish them.
class Value {
 public:
  using List = std::vector<Value>;
  using Object = std::map<std::string, Value>;

  Value() : data_(std::int64_t{0}) {}
  Value(std::int64_t v) : data_(v) {}
  Value(int v) : data_(static_cast<std::int64_t>(v)) {}
  Value(std::string v) : data_(std::move(v)) {}
  Value(const char* v) : data_(std::string(v)) {}
  Value(List v) : data_(std::move(v)) {}
  Value(Object v) : data_(std::move(v)) {}

  bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_string() const { return std::holds_alternative<std::string>(data_); }
  bool is_list() const { return std::holds_alternative<List>(data_); }
  bool is_object() const { return std::holds_alternative<Object>(data_); }

  std::int64_t as_int() const;
  const std::string& as_string() const;
  const List& as_list() const;
  const Object& as_object() const;

  List& list();
  Object& object();

  /// Object field access; throws Error(ParseError) when absent or not an
  /// object. `find` returns nullptr instead of throwing.
  const Value& at(const std::string& key) const;
  const Value* find(const std::string& key) const;

  bool operator==(const Value& other) const { return data_ == other.data_; }

 private:
  std::variant<std::int64_t, std::string, List, Object> data_;
};

/// Emits the canonical byte form: sorted keys, minimal escapes, decimal
/// integers, no whitespace. Throws Error(SerializationError) if any string
/// is not valid UTF-8.
std::string serialize(const Value& value);

/// Strict inverse of serialize: accepts exactly the canonical form (canonical
/// escapes only, no leading zeros, no whitespace, no duplicate keys, no
/// trailing input). Throws Error(ParseError) otherwise.
Value parse(std::string_view text);

}  // namespace ledgerflow::canon
