#pragma once

#include <string>
#include <vector>

namespace hflsim {

// Doubles serialized with 17 significant digits so re-parsing is bit-exact.
std::string fmt_double(double v);

// Header row then data rows, newline-terminated. Every row must match the
// header width. I/O failures surface as std::runtime_error naming the path.
void emit_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows);

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvFile read_csv(const std::string& path);

}  // namespace hflsim
