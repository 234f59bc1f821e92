#include "gif/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gif/error.hpp"

namespace gif {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void CsvWriter::header(const std::vector<std::string>& cols) { cells(cols); }

void CsvWriter::row(const std::vector<double>& vals) {
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) os_ << ',';
    os_ << format_double(vals[i]);
  }
  os_ << '\n';
}

void CsvWriter::cells(const std::vector<std::string>& vals) {
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) os_ << ',';
    os_ << vals[i];
  }
  os_ << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& s, std::size_t line_no) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos)
    throw Error(ErrorKind::Config, "empty CSV cell on line " + std::to_string(line_no));
  const std::string t = s.substr(b, e - b + 1);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw Error(ErrorKind::Config, "bad number '" + t + "' on CSV line " + std::to_string(line_no));
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& is) {
  CsvTable tab;
  std::string line;
  std::size_t no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      tab.header = split(line);
      have_header = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != tab.header.size())
      throw Error(ErrorKind::Config, "CSV line " + std::to_string(no) + " has wrong column count");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, no));
    tab.rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorKind::Config, "CSV input has no header");
  return tab;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace gif
