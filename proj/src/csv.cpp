#include "flowdesign/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <fmt/format.h>

#include "flowdesign/errors.hpp"

namespace flowdesign::csv {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.filename().string(), fmt::format("cannot open {}", path.string()));
  Table t;
  t.source = path.filename().string();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto fields = split(s);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw FormatError(t.source, fmt::format("line {} has {} fields, header has {}", lineno, fields.size(), t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw FormatError(t.source, "missing header row");
  return t;
}

bool Table::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw FormatError(source, fmt::format("missing column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

double Table::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows[row][col];
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError(fmt::format("{}:{}", source, header[col]), fmt::format("row {}: '{}' is not a number", row + 1, s));
}

long long Table::integer(std::size_t row, std::size_t col) const {
  const std::string& s = rows[row][col];
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(fmt::format("{}:{}", source, header[col]), fmt::format("row {}: '{}' is not an integer", row + 1, s));
  return v;
}

}  // namespace flowdesign::csv
