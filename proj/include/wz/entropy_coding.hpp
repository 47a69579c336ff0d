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
#include <span>
#include <string>
#include <vector>

#include "wz/models.hpp"

namespace wz {

inline constexpr std::uint32_t kFrequencyBits = 16;
inline constexpr std::uint32_t kFrequencyTotal = 1u << kFrequencyBits;

/// Static order-0 model: integer frequencies summing to kFrequencyTotal,
/// every symbol at least 1.
class CodingModel {
 public:
  CodingModel() = default;
  /// Takes ownership of an explicit frequency table (as read from a file).
  explicit CodingModel(std::vector<std::uint32_t> frequencies);

  std::size_t size() const { return freq_.size(); }
  std::uint32_t total() const { return cum_.back(); }
  std::uint32_t frequency(std::size_t s) const { return freq_[s]; }
  std::uint32_t cumulative(std::size_t s) const { return cum_[s]; }
  const std::vector<std::uint32_t>& frequencies() const { return freq_; }

  /// Symbol whose cumulative range contains `target` (< total()).
  std::size_t find(std::uint32_t target) const;
  /// -log2 of the quantized probability of s.
  double cost_bits(std::size_t s) const;
  /// 64-bit FNV-1a over K (u16 LE) followed by each frequency (u32 LE).
  std::uint64_t hash() const;

 private:
  std::vector<std::uint32_t> freq_;
  std::vector<std::uint32_t> cum_{0};
};

/// Quantizes a strictly positive probability vector to kFrequencyTotal counts
/// by largest remainder, then lifts zero counts to 1.
CodingModel build_model(std::span<const double> probs);

/// Bits packed MSB-first into bytes; the tail of the last byte is zero.
struct Bitstream {
  std::vector<std::uint8_t> bytes;
  std::uint64_t bit_length = 0;
};

/// Arithmetic coder with 32-bit low/high registers and underflow (pending bit)
/// handling. Termination emits the two bits that select a quarter interval
/// inside the final range.
Bitstream encode(const CodingModel& model, std::span<const std::size_t> symbols);
std::vector<std::size_t> decode(const CodingModel& model, const Bitstream& bits, std::size_t count);

/// Sum of -log2 q(s) under the quantized model.
double ideal_code_length_bits(const CodingModel& model, std::span<const std::size_t> symbols);

// Compressed index files ------------------------------------------------------
//
//   "WZB1" | u8 version | u16 K | u64 model hash | u64 symbol count
//   | K x u32 frequencies | u64 payload bit length | payload bytes
//
// All integers little-endian.

inline constexpr std::uint8_t kStreamVersion = 1;

struct CompressedStream {
  CodingModel model;
  std::uint64_t count = 0;
  Bitstream payload;
};

std::vector<std::uint8_t> serialize_stream(const CompressedStream& stream);
CompressedStream deserialize_stream(std::span<const std::uint8_t> bytes);

/// Coding model of a marginal-prior system's discrete q(u).
CodingModel model_for(const WzSystem& system);

/// One real per line, written with 17 significant digits so values round-trip.
std::vector<double> read_samples(const std::string& path);
void write_samples(const std::string& path, std::span<const double> values);

struct CodecStats {
  std::uint64_t count = 0;
  std::uint64_t payload_bits = 0;
  std::uint64_t file_bytes = 0;
  double bits_per_sample = 0.0;
  double ideal_bits_per_sample = 0.0;  // cross-entropy under the quantized model
};

/// x samples -> deterministic indices -> arithmetic-coded file.
CodecStats codec_encode(const WzSystem& system, const std::string& x_path,
                        const std::string& out_path);
/// Compressed file + y samples -> one-hot decode -> reconstruction file.
CodecStats codec_decode(const WzSystem& system, const std::string& in_path,
                        const std::string& y_path, const std::string& out_path);

}  // namespace wz
