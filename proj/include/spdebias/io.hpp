#pragma once

#include <string>
#include <vector>

namespace spdebias {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Numeric CSV with a required header. Throws Io on a missing file, a header
/// mismatch or an unparsable field.
CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected_header);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace spdebias
