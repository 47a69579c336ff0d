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

#include "wz/entropy_coding.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "wz/byte_io.hpp"
#include "wz/errors.hpp"
#include "wz/evaluation.hpp"

namespace wz {

namespace {

constexpr std::uint64_t kTop = 0xFFFFFFFFULL;
constexpr std::uint64_t kHalf = 0x80000000ULL;
constexpr std::uint64_t kQuarter = 0x40000000ULL;
constexpr char kMagic[4] = {'W', 'Z', 'B', '1'};

class BitWriter {
 public:
  void put(bool bit) {
    if (out_.bit_length % 8 == 0) out_.bytes.push_back(0);
    if (bit) out_.bytes.back() |= static_cast<std::uint8_t>(0x80u >> (out_.bit_length % 8));
    ++out_.bit_length;
  }
  void put_with_pending(bool bit, std::uint64_t& pending) {
    put(bit);
    for (; pending > 0; --pending) put(!bit);
  }
  Bitstream finish() { return std::move(out_); }

 private:
  Bitstream out_;
};

class BitReader {
 public:
  explicit BitReader(const Bitstream& bits) : bits_(bits) {}
  // Past the end the stream reads as zeros.
  std::uint64_t get() {
    if (pos_ >= bits_.bit_length) {
      ++pos_;
      return 0;
    }
    const std::uint8_t byte = bits_.bytes[pos_ / 8];
    const std::uint64_t bit = (byte >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return bit;
  }

 private:
  const Bitstream& bits_;
  std::uint64_t pos_ = 0;
};

void check_model(const CodingModel& model) {
  if (model.size() == 0) throw UsageError("coding model is empty");
}

}  // namespace

CodingModel::CodingModel(std::vector<std::uint32_t> frequencies) : freq_(std::move(frequencies)) {
  if (freq_.empty() || freq_.size() > 0xFFFF) throw FormatError("coding model: bad alphabet size");
  cum_.assign(freq_.size() + 1, 0);
  for (std::size_t s = 0; s < freq_.size(); ++s) {
    if (freq_[s] == 0) throw FormatError("coding model: zero frequency");
    cum_[s + 1] = cum_[s] + freq_[s];
    if (cum_[s + 1] > kFrequencyTotal) throw FormatError("coding model: total exceeds 2^16");
  }
  if (cum_.back() != kFrequencyTotal) throw FormatError("coding model: total must equal 2^16");
}

std::size_t CodingModel::find(std::uint32_t target) const {
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
  return static_cast<std::size_t>(it - cum_.begin()) - 1;
}

double CodingModel::cost_bits(std::size_t s) const {
  return static_cast<double>(kFrequencyBits) - std::log2(static_cast<double>(freq_.at(s)));
}

std::uint64_t CodingModel::hash() const {
  ByteWriter w;
  w.put(static_cast<std::uint16_t>(freq_.size()));
  for (std::uint32_t f : freq_) w.put(f);
  Fnv1a64 h;
  h.update(w.bytes());
  return h.digest();
}

CodingModel build_model(std::span<const double> probs) {
  const std::size_t k = probs.size();
  if (k == 0) throw UsageError("build_model: empty distribution");
  if (k > kFrequencyTotal) throw ConfigError("build_model: alphabet larger than 2^16");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p)) throw NumericError("build_model: non-finite probability");
    if (p <= 0.0) throw UsageError("build_model: probabilities must be strictly positive");
    total += p;
  }
  if (!(total > 0.0)) throw NumericError("build_model: probabilities sum to zero");

  // Largest remainder keeps each count within one of p * 2^16.
  std::vector<std::uint32_t> freq(k);
  std::vector<double> remainder(k);
  std::uint64_t assigned = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const double target = probs[s] / total * kFrequencyTotal;
    const double base = std::floor(target);
    freq[s] = static_cast<std::uint32_t>(base);
    remainder[s] = target - base;
    assigned += freq[s];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < kFrequencyTotal; ++i, ++assigned) ++freq[order[i % k]];

  // Lift zeros to 1, each time taking the count from the symbol furthest above
  // its target.
  for (std::size_t s = 0; s < k; ++s) {
    if (freq[s] > 0) continue;
    freq[s] = 1;
    std::size_t donor = k;
    double excess = -INFINITY;
    for (std::size_t d = 0; d < k; ++d) {
      if (freq[d] < 2) continue;
      const double e = static_cast<double>(freq[d]) - probs[d] / total * kFrequencyTotal;
      if (e > excess) {
        excess = e;
        donor = d;
      }
    }
    --freq[donor];
  }
  return CodingModel(std::move(freq));
}

Bitstream encode(const CodingModel& model, std::span<const std::size_t> symbols) {
  check_model(model);
  BitWriter out;
  std::uint64_t low = 0;
  std::uint64_t high = kTop;
  std::uint64_t pending = 0;
  const std::uint64_t total = model.total();
  for (std::size_t s : symbols) {
    if (s >= model.size()) throw UsageError("encode: symbol out of range");
    const std::uint64_t range = high - low + 1;
    high = low + range * model.cumulative(s + 1) / total - 1;
    low = low + range * model.cumulative(s) / total;
    for (;;) {
      if (high < kHalf) {
        out.put_with_pending(false, pending);
      } else if (low >= kHalf) {
        out.put_with_pending(true, pending);
        low -= kHalf;
        high -= kHalf;
      } else if (low >= kQuarter && high < kHalf + kQuarter) {
        ++pending;
        low -= kQuarter;
        high -= kQuarter;
      } else {
        break;
      }
      low <<= 1;
      high = (high << 1) | 1;
    }
  }
  ++pending;
  out.put_with_pending(low >= kQuarter, pending);
  return out.finish();
}

std::vector<std::size_t> decode(const CodingModel& model, const Bitstream& bits,
                                std::size_t count) {
  check_model(model);
  if (bits.bytes.size() * 8 < bits.bit_length) throw FormatError("decode: truncated payload");
  BitReader in(bits);
  std::uint64_t low = 0;
  std::uint64_t high = kTop;
  std::uint64_t value = 0;
  for (int i = 0; i < 32; ++i) value = (value << 1) | in.get();
  const std::uint64_t total = model.total();

  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t range = high - low + 1;
    const auto target = static_cast<std::uint32_t>(((value - low + 1) * total - 1) / range);
    const std::size_t s = model.find(target);
    out.push_back(s);
    high = low + range * model.cumulative(s + 1) / total - 1;
    low = low + range * model.cumulative(s) / total;
    for (;;) {
      if (high < kHalf) {
        // nothing to subtract
      } else if (low >= kHalf) {
        low -= kHalf;
        high -= kHalf;
        value -= kHalf;
      } else if (low >= kQuarter && high < kHalf + kQuarter) {
        low -= kQuarter;
        high -= kQuarter;
        value -= kQuarter;
      } else {
        break;
      }
      low <<= 1;
      high = (high << 1) | 1;
      value = (value << 1) | in.get();
    }
  }
  return out;
}

double ideal_code_length_bits(const CodingModel& model, std::span<const std::size_t> symbols) {
  double bits = 0.0;
  for (std::size_t s : symbols) bits += model.cost_bits(s);
  return bits;
}

std::vector<std::uint8_t> serialize_stream(const CompressedStream& stream) {
  check_model(stream.model);
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put(kStreamVersion);
  w.put(static_cast<std::uint16_t>(stream.model.size()));
  w.put(stream.model.hash());
  w.put(stream.count);
  for (std::uint32_t f : stream.model.frequencies()) w.put(f);
  w.put(stream.payload.bit_length);
  w.put_bytes(stream.payload.bytes);
  return std::move(w.bytes());
}

CompressedStream deserialize_stream(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("stream: bad magic");
  if (r.get<std::uint8_t>() != kStreamVersion) throw FormatError("stream: unsupported version");
  const auto k = r.get<std::uint16_t>();
  const auto stored_hash = r.get<std::uint64_t>();
  CompressedStream out;
  out.count = r.get<std::uint64_t>();
  std::vector<std::uint32_t> freq(k);
  for (auto& f : freq) f = r.get<std::uint32_t>();
  out.model = CodingModel(std::move(freq));
  if (out.model.hash() != stored_hash) throw FormatError("stream: model hash mismatch");
  out.payload.bit_length = r.get<std::uint64_t>();
  const std::uint64_t n_bytes = (out.payload.bit_length + 7) / 8;
  if (n_bytes != r.remaining()) throw FormatError("stream: payload length mismatch");
  const auto payload = r.take(static_cast<std::size_t>(n_bytes));
  out.payload.bytes.assign(payload.begin(), payload.end());
  return out;
}

CodingModel model_for(const WzSystem& system) {
  if (system.prior_kind() != PriorKind::kMarginal) {
    throw UsageError("codec: entropy coding needs a marginal-prior system");
  }
  std::vector<double> p = system.prior_log_probs(std::optional<double>{});
  for (double& v : p) v = std::exp(v);
  return build_model(p);
}

std::vector<double> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(line.c_str() + first, &end);
    const auto rest = std::string_view(end).find_first_not_of(" \t\r");
    if (end == line.c_str() + first || errno == ERANGE || rest != std::string_view::npos ||
        !std::isfinite(v)) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": not a finite number");
    }
    out.push_back(v);
  }
  if (in.bad()) throw IoError("read failed: " + path);
  return out;
}

void write_samples(const std::string& path, std::span<const double> values) {
  std::string text;
  text.reserve(values.size() * 24);
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    text += buf;
  }
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

CodecStats codec_encode(const WzSystem& system, const std::string& x_path,
                        const std::string& out_path) {
  const CodingModel model = model_for(system);
  const std::vector<double> x = read_samples(x_path);
  const std::vector<std::size_t> u = encode_deterministic(system, x);
  CompressedStream stream{model, u.size(), encode(model, u)};
  const auto bytes = serialize_stream(stream);
  write_file_bytes(out_path, bytes);

  CodecStats stats;
  stats.count = u.size();
  stats.payload_bits = stream.payload.bit_length;
  stats.file_bytes = bytes.size();
  if (!u.empty()) {
    const double n = static_cast<double>(u.size());
    stats.bits_per_sample = static_cast<double>(stream.payload.bit_length) / n;
    stats.ideal_bits_per_sample = ideal_code_length_bits(model, u) / n;
  }
  return stats;
}

CodecStats codec_decode(const WzSystem& system, const std::string& in_path,
                        const std::string& y_path, const std::string& out_path) {
  const CodingModel expected = model_for(system);
  const auto bytes = read_file_bytes(in_path);
  const CompressedStream stream = deserialize_stream(bytes);
  if (stream.model.hash() != expected.hash()) {
    throw FormatError("codec: stream was not produced with this checkpoint's prior");
  }
  const std::vector<double> y = read_samples(y_path);
  if (y.size() != stream.count) {
    throw UsageError("codec: side information has " + std::to_string(y.size()) +
                     " samples, stream has " + std::to_string(stream.count));
  }
  const std::vector<std::size_t> u =
      decode(stream.model, stream.payload, static_cast<std::size_t>(stream.count));

  const Matrix decoded = system.decode(one_hot(u, system.k()),
                                       Eigen::Map<const Matrix>(y.data(), static_cast<Eigen::Index>(y.size()), 1));
  write_samples(out_path, std::span<const double>(decoded.data(), u.size()));

  CodecStats stats;
  stats.count = u.size();
  stats.payload_bits = stream.payload.bit_length;
  stats.file_bytes = bytes.size();
  if (!u.empty()) {
    const double n = static_cast<double>(u.size());
    stats.bits_per_sample = static_cast<double>(stream.payload.bit_length) / n;
    stats.ideal_bits_per_sample = ideal_code_length_bits(stream.model, u) / n;
  }
  return stats;
}

}  // namespace wz
