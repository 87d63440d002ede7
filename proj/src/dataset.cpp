#include "ledgerflow/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ledgerflow/error.hpp"

namespace ledgerflow {

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string encode_dataset(const Dataset& points) {
  std::string out;
  for (const DataPoint& p : points) {
    out += format_real(p.x);
    out += ' ';
    out += format_real(p.y);
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(std::string_view text) {
  Dataset out;
  std::size_t pos = 0;
  std::int64_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    const char* s = line.c_str();
    char* end = nullptr;
    double x = std::strtod(s, &end);
    if (end == s || *end != ' ') {
      throw Error(Errc::ParseError, "bad dataset line " + std::to_string(line_no));
    }
    s = end + 1;
    double y = std::strtod(s, &end);
    if (end == s || *end != '\0') {
      throw Error(Errc::ParseError, "bad dataset line " + std::to_string(line_no));
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw Error(Errc::ParseError,
                  "non-finite value on dataset line " + std::to_string(line_no));
    }
    out.push_back({x, y});
  }
  return out;
}

Digest dataset_digest(const Dataset& points) {
  return compute_digest(encode_dataset(points));
}

const Dataset* DatasetStore::find(const std::string& name) const {
  auto it = sets_.find(name);
  return it == sets_.end() ? nullptr : &it->second;
}

void DatasetStore::put(const std::string& name, Dataset points) {
  sets_[name] = std::move(points);
}

DatasetStore load_dataset_dir(const std::filesystem::path& dir) {
  DatasetStore store;
  if (!std::filesystem::is_directory(dir)) return store;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    store.put(entry.path().filename().string(), parse_dataset(body.str()));
  }
  return store;
}

void save_dataset_dir(const std::filesystem::path& dir, const DatasetStore& store) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, points] : store.all()) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(Errc::IoError, "cannot write dataset " + name);
    }
    out << encode_dataset(points);
  }
}

}  // namespace ledgerflow
