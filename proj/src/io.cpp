#include "tcoupler/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace tcoupler {

void CsvTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::logic_error("csv row width does not match the header");
  rows.push_back(std::move(row));
}

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // no "-0.00000000e+00"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8e", value);
  return buf;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      const bool integer = c < table.integer_columns.size() && table.integer_columns[c];
      out += integer ? std::to_string(static_cast<long long>(std::llround(row[c]))) : format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

CsvTable experiment_table(const ExperimentResult& result) {
  result.check();
  CsvTable table;
  for (const auto& axis : result.axes) table.columns.push_back(axis.name);
  for (const char* p : {"p00", "p01", "p10", "p11"}) table.columns.push_back(p);

  std::vector<std::size_t> index(result.axes.size(), 0);
  for (const auto& point : result.points) {
    std::vector<double> row;
    for (std::size_t a = 0; a < result.axes.size(); ++a) row.push_back(result.axes[a].values[index[a]]);
    for (int k = 0; k < 4; ++k) row.push_back(point(k));
    table.add_row(std::move(row));
    for (std::size_t a = result.axes.size(); a-- > 0;) {
      if (++index[a] < result.axes[a].values.size()) break;
      index[a] = 0;
    }
  }
  return table;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string canonical_dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

nlohmann::json to_json(const Segment& s) {
  return {{"t_start_ns", s.t_start * 1e9}, {"duration_ns", s.duration * 1e9}, {"shape", to_string(s.shape)},
          {"level", s.level},          {"base", s.base},                  {"rise_fall_ns", s.rise_fall * 1e9},
          {"phase_rad", s.phase}};
}

nlohmann::json to_json(const PulseSequence& seq) {
  nlohmann::json channels = nlohmann::json::object();
  for (const auto& ch : seq.channels) {
    nlohmann::json segs = nlohmann::json::array();
    nlohmann::json offs = nlohmann::json::array();
    for (const auto& s : ch.segments) segs.push_back(to_json(s));
    for (const auto& s : ch.offsets) offs.push_back(to_json(s));
    channels[to_string(ch.id)] = {{"segments", segs}, {"offsets", offs}};
  }
  return {{"channels", channels},
          {"total_duration_ns", seq.total_duration * 1e9},
          {"measurement_time_ns", seq.measurement_time * 1e9},
          {"frame_offset_MHz", seq.frame_offset * 1e-6},
          {"units", {{"z_a", "Hz"}, {"z_b", "Hz"}, {"uw_a", "rad/s"}, {"uw_b", "rad/s"}, {"coupler", "A"}}}};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace tcoupler
