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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "wz/training.hpp"

namespace wz::cli {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitIo = 4;

/// Everything a run needs. Loaded from a flat JSON object whose keys are
/// exactly those of to_json_text(RunConfig{}); unknown keys are errors.
struct RunConfig {
  TrainConfig train;
  std::vector<double> lambdas;  // sweep only
  unsigned sweep_threads = 1;
  double map_x_min = -3.5;
  double map_x_max = 3.5;
  std::size_t map_grid = 7000;
  double curve_y_min = -3.5;
  double curve_y_max = 3.5;
  std::size_t curve_points = 141;
  std::string output_dir = "out";

  void validate() const;
};

/// Parses a flat JSON object over the defaults, then applies `overrides`
/// (key, value text) in order. Values are read as JSON, falling back to a bare
/// string. Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::pair<std::string, std::string>>& overrides = {});
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Canonical text: sorted keys, fixed formatting.
std::string to_json_text(const RunConfig& config);
/// FNV-1a 64 of the canonical text without output_dir and the thread counts,
/// none of which change results.
std::uint64_t config_hash(const RunConfig& config);

/// Provenance line for CSV outputs: tool version, command and config hash.
std::string provenance(const std::string& command, std::uint64_t hash);

/// Entry point behind the wzlearn executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wz::cli
