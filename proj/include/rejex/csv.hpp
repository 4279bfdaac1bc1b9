/*
 * Copyright 2026 The RejEx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rejex/core.hpp"

namespace rejex::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> SplitLine(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(Trim(line.substr(start)));
      break;
    }
    cells.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

inline bool ParseDouble(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

/// Parses a rectangular numeric CSV with a mandatory header row. Blank lines
/// are skipped. Errors name the 1-based line and column of the bad cell.
inline Table Parse(std::istream& in, const std::string& source = "<input>") {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cells = SplitLine(line);
    if (!have_header) {
      for (auto c : cells) table.header.emplace_back(c);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      internal::Fail(ErrorCode::kParseError,
                     source + ": line " + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " cells, header has " +
                         std::to_string(table.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!ParseDouble(cells[j], row[j])) {
        internal::Fail(ErrorCode::kParseError, source + ": line " + std::to_string(line_no) +
                                                   ", column " + std::to_string(j + 1) +
                                                   ": not a number: '" + std::string(cells[j]) + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) internal::Fail(ErrorCode::kParseError, source + ": missing header row");
  return table;
}

inline Table ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) internal::Fail(ErrorCode::kParseError, "cannot open " + path);
  return Parse(in, path);
}

/// Shortest text that parses back to the same double (at most 17 digits).
inline std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace rejex::csv
