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
#include <memory>
#include <string>
#include <vector>

#include "wz/rng.hpp"

namespace wz {

enum class Direction {
  kXEqualsYPlusN,  // X = Y + N, base variance is Var(Y)
  kYEqualsXPlusN,  // Y = X + N, base variance is Var(X)
};

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

/// Jointly Gaussian, zero-mean (X, Y) pair built from an independent noise term.
struct SourceModel {
  Direction direction = Direction::kXEqualsYPlusN;
  double base_variance = 1.0;
  double noise_variance = 0.1;

  void validate() const;
  double variance_x() const;
  double variance_y() const;
  /// Var(X | Y), the quantity that sets the Wyner-Ziv bound.
  double conditional_variance() const;
};

struct SampleBatch {
  std::vector<double> x;
  std::vector<double> y;
  std::uint64_t seed = 0;  // seed of the generator that produced the batch
  std::uint64_t offset = 0;  // number of batches drawn from that generator before this one

  std::size_t size() const { return x.size(); }
};

/// Source of correlated (x, y) pairs. Gaussian is the only shipped implementation.
class Source {
 public:
  virtual ~Source() = default;
  virtual void sample(std::size_t count, Rng& rng, std::vector<double>& x,
                      std::vector<double>& y) const = 0;
  virtual double variance_x() const = 0;
};

class GaussianSource final : public Source {
 public:
  explicit GaussianSource(SourceModel model);
  void sample(std::size_t count, Rng& rng, std::vector<double>& x,
              std::vector<double>& y) const override;
  double variance_x() const override { return model_.variance_x(); }
  const SourceModel& model() const { return model_; }

 private:
  SourceModel model_;
};

SampleBatch sample_pairs(const SourceModel& model, std::size_t count, Rng& rng);

/// Asymptotic Wyner-Ziv distortion at `rate_bits`, in dB.
double wz_rd_distortion_db(const SourceModel& model, double rate_bits);
/// Asymptotic point-to-point (no side information) distortion, in dB.
double point_to_point_rd_db(const SourceModel& model, double rate_bits);
/// 10 log10(pi e / 6): high-rate MSE penalty of one-shot entropy-coded scalar quantization.
double space_filling_offset_db();

struct BaselineRow {
  double rate_bits;
  double wz_db;
  double wz_plus_offset_db;
  double p2p_db;
};

/// Samples the three baseline curves on rate_min, rate_min + step, ... <= rate_max.
std::vector<BaselineRow> baseline_curves(const SourceModel& model, double rate_min,
                                         double rate_max, double rate_step);

}  // namespace wz
