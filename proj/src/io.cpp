#include "ftmsim/io.hpp"

#include <cstdio>

#include "ftmsim/crypto.hpp"

namespace ftmsim {

std::string config_hash_hex(const Json& config) {
  const std::string canon = config.dump();
  const Digest d = sha256(as_bytes(canon));
  return to_hex(d);
}

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_num(int64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
  return buf;
}

std::string fmt_num(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(v));
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& schema,
                     const std::vector<std::string>& columns, const std::string& config_hash,
                     uint64_t seed)
    : out_(path), n_cols_(columns.size()), path_(path) {
  if (!out_) throw SimError("cannot open " + path + " for writing");
  out_ << "# ftmsim-csv v1 schema=" << schema << " config_sha256=" << config_hash
       << " seed=" << seed << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) throw SimError("CSV row width mismatch in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out_ << cells[i] << (i + 1 < cells.size() ? "," : "");
  }
  out_ << "\n";
}

void CsvWriter::close() { out_.close(); }

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw SimError("cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace ftmsim
