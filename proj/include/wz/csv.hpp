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

#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace wz {

inline constexpr const char* kToolVersion = "wzlearn 1.0.0";

/// Floats with 9 significant digits, as every CSV in the project uses.
std::string format_double(double v);

/// CSV file with a leading "# <provenance>" comment line and a header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& provenance,
            std::initializer_list<std::string> columns);

  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(unsigned long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<unsigned long long>(v)); }
  void end_row();
  void close();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

/// Rows of a CSV written by CsvWriter: comment lines skipped, header returned separately.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

}  // namespace wz
