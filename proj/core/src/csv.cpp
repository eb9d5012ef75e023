#include "memaudit/csv.hpp"

#include <cstdio>
#include <fstream>

#include "memaudit/error.hpp"

namespace memaudit {

std::string format_sig9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCategory::Format, "cannot write CSV: " + path);
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  };
  emit_row(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw_error(ErrorCategory::Argument,
                  "CSV row width does not match the header: " + path);
    emit_row(row);
  }
}

}  // namespace memaudit
