// Copyright 2026 The wzlearn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wz/csv.hpp"

#include <cstdio>
#include <sstream>

#include "wz/errors.hpp"

namespace wz {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& provenance,
                     std::initializer_list<std::string> columns)
    : path_(path), out_(path, std::ios::trunc), columns_(columns.size()) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
  out_ << "# " << provenance << '\n';
  bool first = true;
  for (const auto& c : columns) {
    out_ << (first ? "" : ",") << c;
    first = false;
  }
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (in_row_ > 0) out_ << ',';
  out_ << s;
  ++in_row_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::cell(unsigned long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  if (in_row_ != columns_) {
    throw UsageError("csv '" + path_ + "': row has " + std::to_string(in_row_) +
                     " cells, header has " + std::to_string(columns_));
  }
  out_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw IoError("write failed for '" + path_ + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace wz
