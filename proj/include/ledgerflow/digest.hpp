#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "ledgerflow/bytes.hpp"

namespace ledgerflow {

/// 32-byte content digest, rendered as 64 lowercase hex characters.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  static Digest zero() { return Digest{}; }
  static Digest from_hex(std::string_view hex);

  std::string hex() const;
  bool is_zero() const;

  auto operator<=>(const Digest&) const = default;
};

/// SHA-256 of the input bytes.
Digest compute_digest(const void* data, std::size_t len);
Digest compute_digest(std::string_view data);
Digest compute_digest(const Bytes& data);

}  // namespace ledgerflow
