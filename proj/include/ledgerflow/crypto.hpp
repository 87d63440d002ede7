#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string_view>

#include "ledgerflow/bytes.hpp"

namespace ledgerflow::crypto {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kSeedSize = 32;
inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSignatureSize = 64;

std::array<std::uint8_t, 32> sha256(const void* data, std::size_t len);
std::array<std::uint8_t, 32> sha256(std::string_view data);
std::array<std::uint8_t, 32> sha256(const Bytes& data);

/// A verification handle for one Ed25519 public key. Cheap to copy; safe to
/// use from several threads concurrently.
class PublicKey {
 public:
  PublicKey() = default;
  static PublicKey from_bytes(const Bytes& raw32);

  bool valid() const { return handle_ != nullptr; }
  const Bytes& bytes() const { return raw_; }
  bool verify(const Bytes& message, const Bytes& signature) const;

 private:
  std::shared_ptr<void> handle_;  // EVP_PKEY
  Bytes raw_;
};

struct KeyPair {
  Bytes seed;        // 32-byte private seed
  Bytes public_key;  // 32-byte public key
};

/// Deterministic Ed25519 keypair from the first 32 bytes of `seed`.
/// Throws Error(SeedTooShort) when fewer than 32 bytes are supplied.
KeyPair keypair_from_seed(const Bytes& seed);

Bytes sign(const Bytes& message, const Bytes& seed32);
bool verify(const Bytes& message, const Bytes& signature, const Bytes& public_key);

}  // namespace ledgerflow::crypto
