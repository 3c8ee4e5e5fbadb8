// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "psytraj/linalg.hpp"

namespace psytraj::csv {

struct Table {
  std::vector<std::string> header;
  linalg::Matrix values;
};

// Strict numeric CSV: one header row of column names, then rows of finite
// decimal floats. Accepts LF or CRLF and a UTF-8 BOM. Ragged rows,
// non-numeric cells, and non-finite values are parse errors that name the
// offending data row (1-based, header excluded) and column.
Table read_table(const std::filesystem::path& path);

// Values are written in the shortest form that round-trips exactly.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const linalg::Matrix& values);

}  // namespace psytraj::csv
