#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ledgerflow/digest.hpp"

namespace ledgerflow {

struct DataPoint {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const DataPoint&) const = default;
};

using Dataset = std::vector<DataPoint>;

/// 17 significant digits; round-trips any double exactly.
std::string format_real(double value);

/// One point per line: "<x> <y>" in decimal. This encoding is what digests
/// are computed over, so it must stay byte-stable.
std::string encode_dataset(const Dataset& points);
Dataset parse_dataset(std::string_view text);

Digest dataset_digest(const Dataset& points);

class DatasetStore {
 public:
  bool has(const std::string& name) const { return sets_.count(name) != 0; }
  const Dataset* find(const std::string& name) const;
  void put(const std::string& name, Dataset points);
  const std::map<std::string, Dataset>& all() const { return sets_; }

 private:
  std::map<std::string, Dataset> sets_;
};

/// Loads every regular file in `dir` as a dataset named after the file.
DatasetStore load_dataset_dir(const std::filesystem::path& dir);
void save_dataset_dir(const std::filesystem::path& dir, const DatasetStore& store);

}  // namespace ledgerflow
