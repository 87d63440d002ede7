#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ledgerflow {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(const std::uint8_t* data, std::size_t len);
std::string to_hex(const Bytes& data);

/// Decodes a lowercase/uppercase hex string. Throws Error(ParseError) on odd
/// length or non-hex characters.
Bytes from_hex(std::string_view hex);

Bytes to_bytes(std::string_view s);
std::string to_string(const Bytes& b);

/// True iff s is well-formed UTF-8 (rejects overlong forms, surrogates,
/// and code points above U+10FFFF).
bool is_valid_utf8(std::string_view s);

}  // namespace ledgerflow
