#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "ensen/engine.hpp"
#include "ensen/model.hpp"
#include "ensen/oracle.hpp"

namespace ensen::io {

// Doubles are printed with 17 significant digits so files parse back to the
// exact bit pattern.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string sha1_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw IoError("sha1: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

// Plain-text tabular map file: header lines carry the level, time and config
// hash; one row per dof with 1-based index, coordinate(s) and value.
inline void write_map_file(const std::filesystem::path& path, const SensitivityMap& map,
                           const ForwardModel& model, const std::string& config_hash) {
  std::ostringstream os;
  os << "# sensitivity map\n";
  os << "# level " << map.time_level << " time "
     << format_double(map.time_level * model.dt()) << "\n";
  os << "# config_hash " << config_hash << "\n";
  os << "# columns: index";
  for (int d = 0; d < model.coord_dim(); ++d) os << (d == 0 ? " x" : " y");
  os << " value\n";
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    os << (i + 1);
    const auto xy = model.dof_coordinate(static_cast<int>(i));
    for (int d = 0; d < model.coord_dim(); ++d) os << ' ' << format_double(xy[static_cast<std::size_t>(d)]);
    os << ' ' << format_double(map.values[i]) << '\n';
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << os.str();
  if (!f) throw IoError("write failed for " + path.string());
}

inline SensitivityMap read_map_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  SensitivityMap map;
  std::string line;
  bool have_level = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream is(line);
      std::string hash_tag, key;
      is >> hash_tag >> key;
      if (key == "level") {
        is >> map.time_level;
        have_level = true;
      }
      continue;
    }
    std::istringstream is(line);
    long index = 0;
    is >> index;
    std::vector<double> nums;
    double v = 0.0;
    while (is >> v) nums.push_back(v);
    if (nums.empty()) throw IoError("bad row in " + path.string());
    map.values.push_back(nums.back()); // last column is the value
  }
  if (!have_level) throw IoError("missing level header in " + path.string());
  return map;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << body;
  if (!f) throw IoError("write failed for " + path.string());
}

struct MetricsRow {
  int level = 0;
  MapComparison comparison;
};

inline std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "level,l2_rel_error,cosine_similarity,peak_offset_cells,zero_flag\n";
  for (const MetricsRow& r : rows) {
    os << r.level << ',' << format_double(r.comparison.l2_rel_error) << ','
       << format_double(r.comparison.cosine_similarity) << ',' << r.comparison.peak_offset_cells
       << ',' << (r.comparison.zero_flag ? 1 : 0) << '\n';
  }
  return os.str();
}

} // namespace ensen::io
