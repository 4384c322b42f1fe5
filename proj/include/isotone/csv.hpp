#pragma once

// Strict numeric CSV reading (header row, '.' decimals, errors carry line
// and column) and locale-independent number formatting for reports.

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace isotone {

class CsvError : public std::runtime_error {
 public:
  CsvError(int line, int column, const std::string& what)
      : std::runtime_error("parse error at line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline double parse_cell(const std::string& cell, int line, int column) {
  if (cell.empty()) throw CsvError(line, column, "empty cell");
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw CsvError(line, column, "non-numeric cell '" + cell + "'");
  }
  return v;
}

}  // namespace detail

inline CsvTable read_numeric_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw CsvError(1, 1, "empty input");
  ++lineno;
  table.header = detail::split_csv_line(line);
  if (table.header.empty()) throw CsvError(1, 1, "empty header");
  const std::size_t width = table.header.size();
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != width) {
      throw CsvError(lineno, static_cast<int>(cells.size()),
                     "expected " + std::to_string(width) + " cells, got " +
                         std::to_string(cells.size()));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      row[c] = detail::parse_cell(cells[c], lineno, static_cast<int>(c) + 1);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw CsvError(lineno + 1, 1, "no data rows");
  return table;
}

inline CsvTable read_numeric_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  return read_numeric_csv(in);
}

// Scientific with 17 fractional digits: lossless at double precision and
// byte-stable across platforms and locales.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 17);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

}  // namespace isotone
