#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ftmsim/common.hpp"

namespace ftmsim {

using Json = nlohmann::json;

/// SHA-256 over the canonical (sorted-key) JSON dump.
std::string config_hash_hex(const Json& config);

/// Locale-independent shortest-roundtrip-ish numeric formatting, stable
/// across runs so outputs can be compared byte-for-byte.
std::string fmt_num(double v);
std::string fmt_num(int64_t v);
std::string fmt_num(uint64_t v);

/// CSV with a versioned header comment carrying the schema name, config
/// hash and seed. Column layout is fixed at construction.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema,
            const std::vector<std::string>& columns, const std::string& config_hash,
            uint64_t seed);

  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  std::size_t n_cols_;
  std::string path_;
};

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

}  // namespace ftmsim
