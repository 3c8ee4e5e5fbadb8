// SPDX-License-Identifier: Apache-2.0
#include "psytraj/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <string_view>

#include "psytraj/error.hpp"
#include "psytraj/util.hpp"

namespace psytraj::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
  const std::string where =
      "row " + std::to_string(row) + ", column " + std::to_string(col);
  if (cell.empty()) fail(errc::parse, "csv: empty cell at " + where);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    fail(errc::parse, "csv: non-numeric cell '" + std::string(cell) + "' at " + where);
  }
  if (!std::isfinite(value)) {
    fail(errc::parse, "csv: non-finite value '" + std::string(cell) + "' at " + where);
  }
  return value;
}

}  // namespace

Table read_table(const std::filesystem::path& path) {
  std::string text = read_file_text(path);
  if (text.size() >= 3 && std::memcmp(text.data(), "\xEF\xBB\xBF", 3) == 0) {
    text.erase(0, 3);
  }

  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const std::size_t pos = rest.find('\n');
      if (pos == std::string_view::npos) {
        lines.push_back(rest);
        break;
      }
      lines.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  }
  if (lines.empty()) fail(errc::empty_input, "csv: empty file: " + path.string());

  Table table;
  for (std::string_view name : split_fields(lines[0])) {
    table.header.emplace_back(name);
  }
  const std::size_t ncols = table.header.size();

  const std::size_t nrows = lines.size() - 1;
  table.values = linalg::Matrix(nrows, ncols);
  for (std::size_t r = 0; r < nrows; ++r) {
    const auto fields = split_fields(lines[r + 1]);
    if (fields.size() != ncols) {
      fail(errc::parse, "csv: row " + std::to_string(r + 1) + " has " +
                            std::to_string(fields.size()) + " cells, expected " +
                            std::to_string(ncols));
    }
    double* out = table.values.row(r);
    for (std::size_t c = 0; c < ncols; ++c) {
      out[c] = parse_cell(fields[c], r + 1, c + 1);
    }
  }
  return table;
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const linalg::Matrix& values) {
  if (header.size() != values.cols) {
    fail(errc::shape_mismatch, "csv: header has " + std::to_string(header.size()) +
                                   " names for " + std::to_string(values.cols) + " columns");
  }
  std::string out;
  out.reserve(values.size() * 12 + header.size() * 8);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c > 0) out += ',';
    out += header[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < values.rows; ++r) {
    const double* row = values.row(r);
    for (std::size_t c = 0; c < values.cols; ++c) {
      if (c > 0) out += ',';
      out += fmt_double(row[c]);
    }
    out += '\n';
  }
  write_file_text(path, out);
}

}  // namespace psytraj::csv
