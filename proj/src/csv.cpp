#include "hflsim/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hflsim {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows) {
  for (const auto& r : rows)
    if (r.size() != header.size())
      throw std::logic_error("csv row width does not match schema for " + path);
  std::ofstream f(path, std::ios::binary);  // fixed newlines on all platforms
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  auto write_row = [&f](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) f << ',';
      f << cells[i];
    }
    f << '\n';
  };
  write_row(header);
  for (const auto& r : rows) write_row(r);
  f.flush();
  if (!f) throw std::runtime_error("write failed: " + path);
}

CsvFile read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  CsvFile out;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.empty()) continue;
    if (line.back() == ',') cells.push_back("");
    if (first) {
      out.header = cells;
      first = false;
    } else {
      out.rows.push_back(cells);
    }
  }
  return out;
}

}  // namespace hflsim
