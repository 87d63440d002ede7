#include "ledgerflow/digest.hpp"

#include <algorithm>

#include "ledgerflow/crypto.hpp"
#include "ledgerflow/error.hpp"

namespace ledgerflow {

Digest Digest::from_hex(std::string_view hex) {
  if (hex.size() != 64) {
    throw Error(Errc::ParseError, "digest must be 64 hex characters");
  }
  Bytes raw = ledgerflow::from_hex(hex);
  Digest d;
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

std::string Digest::hex() const { return to_hex(bytes.data(), bytes.size()); }

bool Digest::is_zero() const {
  return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
}

Digest compute_digest(const void* data, std::size_t len) {
  Digest d;
  d.bytes = crypto::sha256(data, len);
  return d;
}

Digest compute_digest(std::string_view data) {
  return compute_digest(data.data(), data.size());
}

Digest compute_digest(const Bytes& data) {
  return compute_digest(data.data(), data.size());
}

}  // namespace ledgerflow
