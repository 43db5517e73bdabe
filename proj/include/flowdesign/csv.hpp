#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace flowdesign::csv {

// Minimal comma-separated table: no quoting, fields trimmed, blank lines and
// lines starting with '#' skipped. The first remaining line is the header.
struct Table {
  std::string source;  // file name used in error messages
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column; throws FormatError naming the file if missing.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;
};

Table read(const std::filesystem::path& path);
std::vector<std::string> split(const std::string& line, char sep = ',');
std::string trim(const std::string& s);

}  // namespace flowdesign::csv
