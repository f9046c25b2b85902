#pragma once

// Minimal numeric CSV tables with 17-significant-digit floats.

#include "romforge/types.hpp"

#include <string>
#include <vector>

namespace romforge::csv {

std::string format_double(double v);

struct Table {
  std::vector<std::string> header;
  Matrix values;
};

void write_table(const std::string& path, const std::vector<std::string>& header, const Matrix& values);
Table read_table(const std::string& path);

}  // namespace romforge::csv
