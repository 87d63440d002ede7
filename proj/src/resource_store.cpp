#include "ledgerflow/resource_store.hpp"

#include <fstream>
#include <sstream>

#include "ledgerflow/error.hpp"

namespace ledgerflow {

Digest ResourceStore::put(std::string body) {
  Digest digest = compute_digest(body);
  entries_[digest] = std::move(body);
  return digest;
}

std::optional<std::string> ResourceStore::get(const Digest& digest) const {
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResourceStore::put_raw(const Digest& digest, std::string body) {
  entries_[digest] = std::move(body);
}

ResourceStore load_resource_dir(const std::filesystem::path& dir) {
  ResourceStore store;
  if (!std::filesystem::is_directory(dir)) return store;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() != 64) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    store.put_raw(Digest::from_hex(name), body.str());
  }
  return store;
}

void save_resource_dir(const std::filesystem::path& dir, const ResourceStore& store) {
  std::filesystem::create_directories(dir);
  for (const auto& [digest, body] : store.entries()) {
    std::ofstream out(dir / digest.hex(), std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(Errc::IoError, "cannot write resource " + digest.hex());
    }
    out << body;
  }
}

}  // namespace ledgerflow
