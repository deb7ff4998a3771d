#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lagrangeforge::cli {

// Writes `content` to `path` through a temporary file in the same directory
// followed by a rename, so readers never observe a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Shortest round-trip text of a double ("." decimal separator, locale-free).
std::string number_text(double value);

// RFC 4180 table: CRLF line ends, fields quoted when they contain a comma,
// quote, CR or LF.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> row);
  std::string str() const;
  static std::string quote(const std::string& field);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace lagrangeforge::cli
