#include "csv.hpp"

#include "romforge/error.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace romforge::csv {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table(const std::string& path, const std::vector<std::string>& header, const Matrix& values) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV file '" + path + "'", 0);
  t.header = split(line);
  std::vector<std::vector<double>> rows;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw FormatError("CSV row width differs from header", offset);
    std::vector<double> row;
    for (const std::string& c : cells) {
      char* end = nullptr;
      row.push_back(std::strtod(c.c_str(), &end));
      if (end == c.c_str() || *end != '\0') throw FormatError("bad number '" + c + "' in CSV", offset);
    }
    rows.push_back(std::move(row));
    offset += line.size() + 1;
  }
  t.values.resize(Index(rows.size()), Index(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) t.values(Index(r), Index(c)) = rows[r][c];
  return t;
}

}  // namespace romforge::csv
