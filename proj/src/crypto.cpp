#include "ledgerflow/crypto.hpp"

#include <openssl/evp.h>

#include <cstring>

#include "ledgerflow/error.hpp"

namespace ledgerflow::crypto {

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

void pkey_deleter(void* p) { EVP_PKEY_free(static_cast<EVP_PKEY*>(p)); }

void digest_into(const EVP_MD* md, const void* data, std::size_t len,
                 std::uint8_t* out) {
  unsigned int out_len = 0;
  if (EVP_Digest(data, len, out, &out_len, md, nullptr) != 1) {
    throw Error(Errc::SerializationError, "digest computation failed");
  }
}

}  // namespace

std::array<std::uint8_t, 32> sha256(const void* data, std::size_t len) {
  std::array<std::uint8_t, 32> out{};
  digest_into(EVP_sha256(), data, len, out.data());
  return out;
}

std::array<std::uint8_t, 32> sha256(std::string_view data) {
  return sha256(data.data(), data.size());
}

std::array<std::uint8_t, 32> sha256(const Bytes& data) {
  return sha256(data.data(), data.size());
}

PublicKey PublicKey::from_bytes(const Bytes& raw32) {
  if (raw32.size() != kPublicKeySize) {
    throw Error(Errc::ParseError, "public key must be 32 bytes");
  }
  EVP_PKEY* pkey = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                               raw32.data(), raw32.size());
  if (pkey == nullptr) {
    throw Error(Errc::ParseError, "invalid ed25519 public key");
  }
  PublicKey out;
  out.handle_ = std::shared_ptr<void>(pkey, pkey_deleter);
  out.raw_ = raw32;
  return out;
}

bool PublicKey::verify(const Bytes& message, const Bytes& signature) const {
  if (handle_ == nullptr || signature.size() != kSignatureSize) return false;
  MdCtx ctx(EVP_MD_CTX_new());
  if (ctx == nullptr) return false;
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr,
                           static_cast<EVP_PKEY*>(handle_.get())) != 1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                          message.data(), message.size()) == 1;
}

KeyPair keypair_from_seed(const Bytes& seed) {
  if (seed.size() < kSeedSize) {
    throw Error(Errc::SeedTooShort, "seed must be at least 32 bytes");
  }
  EVP_PKEY* pkey = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                                seed.data(), kSeedSize);
  if (pkey == nullptr) {
    throw Error(Errc::SeedTooShort, "key derivation failed");
  }
  KeyPair kp;
  kp.seed.assign(seed.begin(), seed.begin() + kSeedSize);
  kp.public_key.resize(kPublicKeySize);
  std::size_t len = kp.public_key.size();
  const int rc = EVP_PKEY_get_raw_public_key(pkey, kp.public_key.data(), &len);
  EVP_PKEY_free(pkey);
  if (rc != 1 || len != kPublicKeySize) {
    throw Error(Errc::SeedTooShort, "public key extraction failed");
  }
  return kp;
}

Bytes sign(const Bytes& message, const Bytes& seed32) {
  if (seed32.size() < kSeedSize) {
    throw Error(Errc::SeedTooShort, "signing seed must be at least 32 bytes");
  }
  EVP_PKEY* pkey = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                                seed32.data(), kSeedSize);
  if (pkey == nullptr) {
    throw Error(Errc::SeedTooShort, "key derivation failed");
  }
  Bytes sig(kSignatureSize);
  std::size_t sig_len = sig.size();
  MdCtx ctx(EVP_MD_CTX_new());
  int rc = 0;
  if (ctx != nullptr &&
      EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey) == 1) {
    rc = EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(),
                        message.size());
  }
  EVP_PKEY_free(pkey);
  if (rc != 1 || sig_len != kSignatureSize) {
    throw Error(Errc::SerializationError, "signing failed");
  }
  return sig;
}

bool verify(const Bytes& message, const Bytes& signature, const Bytes& public_key) {
  if (public_key.size() != kPublicKeySize) return false;
  EVP_PKEY* pkey = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                               public_key.data(), public_key.size());
  if (pkey == nullptr) return false;
  bool ok = false;
  {
    MdCtx ctx(EVP_MD_CTX_new());
    if (ctx != nullptr && signature.size() == kSignatureSize &&
        EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey) == 1) {
      ok = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                            message.data(), message.size()) == 1;
    }
  }
  EVP_PKEY_free(pkey);
  return ok;
}

}  // namespace ledgerflow::crypto
