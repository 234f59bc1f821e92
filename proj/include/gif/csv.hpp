#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gif {

/// Shortest round-trip decimal form; identical bytes on every run.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<double>& vals);
  // mixed row: strings are written verbatim
  void cells(const std::vector<std::string>& vals);

 private:
  std::ostream& os_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV with one header row.
CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::string& path);

}  // namespace gif
