#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace qsense {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// Column-oriented table written as CSV with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  std::string to_string() const;
  void write(const std::filesystem::path& path) const;
  static CsvTable read(const std::filesystem::path& path);
};

}  // namespace qsense
