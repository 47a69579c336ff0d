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

#include <stdexcept>
#include <string>

namespace wz {

// Error hierarchy. The CLI maps these onto exit codes (see tools/wzlearn.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad shapes, invalid hyperparameters, malformed config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API misuse: wrong argument combination, out-of-range request.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required, training divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Corrupt, truncated or version-mismatched files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace wz
