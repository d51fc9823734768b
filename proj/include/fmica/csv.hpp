// SPDX-License-Identifier: Apache-2.0
//
// Numeric CSV: comma separated, LF line endings, up to 12 significant digits,
// "inf" for non-finite cells. Files hold one observation per row.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fmica/error.hpp"
#include "fmica/numerics.hpp"

namespace fmica::csv {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j) out << ',';
    out << format_number(values[j]);
  }
  out << '\n';
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) write_row(out, m.row(i));
}

/// Parse failure with the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::InvalidInput, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline double parse_cell(std::string_view cell, std::size_t line) {
  std::size_t b = 0, e = cell.size();
  while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
  while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t' || cell[e - 1] == '\r')) --e;
  cell = cell.substr(b, e - b);
  if (cell.empty()) throw ParseError(line, "empty cell");
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError(line, "not a number: '" + std::string(cell) + "'");
  return v;
}

/// Rows of numbers; blank lines are skipped. Returns an n x p matrix
/// (one row per observation). Throws ParseError on malformed input and
/// Error("no data rows") when nothing was read.
inline Matrix read_numeric(std::istream& in, bool header) {
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && line_no == 1) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0, start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      values.push_back(parse_cell(std::string_view(line).substr(start, comma - start), line_no));
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    else if (count != cols)
      throw ParseError(line_no, "expected " + std::to_string(cols) + " columns, found " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::InvalidInput, "no data rows");
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data().begin());
  return m;
}

}  // namespace fmica::csv
