#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ledgerflow/digest.hpp"

namespace ledgerflow {

/// Content-addressed blob store: key is the SHA-256 of the body. Backed by a
/// plain map; directory persistence writes one file per entry named by its
/// hex digest.
class ResourceStore {
 public:
  Digest put(std::string body);
  std::optional<std::string> get(const Digest& digest) const;
  bool contains(const Digest& digest) const { return entries_.count(digest) != 0; }
  void erase(const Digest& digest) { entries_.erase(digest); }

  /// Inserts a body under a caller-supplied key without hashing. Used when
  /// mirroring entries between stores; also how tests simulate tampering.
  void put_raw(const Digest& digest, std::string body);

  const std::map<Digest, std::string>& entries() const { return entries_; }

 private:
  std::map<Digest, std::string> entries_;
};

ResourceStore load_resource_dir(const std::filesystem::path& dir);
void save_resource_dir(const std::filesystem::path& dir, const ResourceStore& store);

}  // namespace ledgerflow
