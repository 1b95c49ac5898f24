#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcoupler/experiments.hpp"
#include "tcoupler/sequences.hpp"

namespace tcoupler {

/// Column-major numeric table. Columns listed in `integer_columns` print as
/// integers; every other value prints as %.8e.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<bool> integer_columns;  // empty means none

  void add_row(std::vector<double> row);
};

std::string format_number(double value);
std::string to_csv(const CsvTable& table);

/// One row per grid point: axis columns, then p00, p01, p10, p11.
CsvTable experiment_table(const ExperimentResult& result);

std::string sha256_hex(const std::string& data);

/// Canonical text of a JSON document: sorted keys, two-space indent, trailing newline.
std::string canonical_dump(const nlohmann::json& doc);

nlohmann::json to_json(const Segment& segment);
nlohmann::json to_json(const PulseSequence& seq);

/// Writes `text` to `path` in binary mode; throws std::runtime_error on failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace tcoupler
