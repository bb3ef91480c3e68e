// Copyright 2026 The vsdesign Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VSDESIGN_CSV_HPP
#define VSDESIGN_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vsdesign/error.hpp"
#include "vsdesign/linalg.hpp"

namespace vsdesign {

struct LoadedData {
  DesignMatrix x;
  /// Present when the header names the last column `y`.
  std::optional<Vector> y;
  std::vector<std::string> header;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

inline std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses comma-separated rows of numbers. An optional first line holding
/// any non-numeric field is treated as a header; LF and CRLF endings are
/// both accepted.
inline LoadedData parse_matrix_csv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(start, end - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorCode::kParseError, "input is empty");

  LoadedData out;
  std::size_t first_data = 0;
  {
    const auto fields = detail::split_fields(lines[0]);
    bool numeric = true;
    for (auto f : fields) numeric = numeric && detail::parse_number(f).has_value();
    if (!numeric) {
      for (auto f : fields) out.header.emplace_back(f);
      first_data = 1;
    }
  }
  const bool has_y = !out.header.empty() && out.header.back() == "y";

  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  for (std::size_t li = first_data; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (detail::trim(lines[li]).empty()) {
      fail(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": empty line");
    }
    const auto fields = detail::split_fields(lines[li]);
    if (rows.empty() && out.header.empty()) width = fields.size();
    if (rows.empty() && !out.header.empty()) width = out.header.size();
    if (fields.size() != width) {
      fail(ErrorCode::kRaggedRows, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                       " fields, expected " + std::to_string(width));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = detail::parse_number(fields[c]);
      if (!v) {
        fail(ErrorCode::kParseError, "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                         ": cannot parse '" + std::string(fields[c]) + "' as a number");
      }
      if (!std::isfinite(*v)) {
        fail(ErrorCode::kNonFiniteEntry,
             "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) + " is not finite");
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::kParseError, "no data rows");

  const std::size_t cols = has_y ? width - 1 : width;
  if (cols < 1) fail(ErrorCode::kParseError, "no experiment columns besides y");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    if (has_y) y(static_cast<Eigen::Index>(i)) = rows[i][cols];
  }
  out.x = DesignMatrix(std::move(m));
  if (has_y) out.y = std::move(y);
  return out;
}

inline LoadedData load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kParseError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matrix_csv(buf.str());
}

}  // namespace vsdesign

#endif  // VSDESIGN_CSV_HPP
