#pragma once

#include <string>
#include <vector>

namespace memaudit {

// Formats a double with 9 significant digits, the convention for all
// exported distance and score tables.
std::string format_sig9(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);

}  // namespace memaudit
