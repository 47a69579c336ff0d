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

#include "wz/sources.hpp"

#include <cmath>
#include <numbers>

#include "wz/errors.hpp"

namespace wz {

namespace {

double to_db(double v) { return 10.0 * std::log10(v); }

void require_rate(double rate_bits) {
  if (!(rate_bits >= 0.0)) throw UsageError("rate must be non-negative");
}

}  // namespace

std::string to_string(Direction d) {
  return d == Direction::kXEqualsYPlusN ? "x=y+n" : "y=x+n";
}

Direction direction_from_string(const std::string& s) {
  if (s == "x=y+n") return Direction::kXEqualsYPlusN;
  if (s == "y=x+n") return Direction::kYEqualsXPlusN;
  throw ConfigError("unknown source direction '" + s + "' (expected x=y+n or y=x+n)");
}

void SourceModel::validate() const {
  if (!(base_variance > 0.0) || !std::isfinite(base_variance)) {
    throw ConfigError("source base variance must be positive");
  }
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw ConfigError("source noise variance must be positive");
  }
}

double SourceModel::variance_x() const {
  return direction == Direction::kXEqualsYPlusN ? base_variance + noise_variance : base_variance;
}

double SourceModel::variance_y() const {
  return direction == Direction::kXEqualsYPlusN ? base_variance : base_variance + noise_variance;
}

double SourceModel::conditional_variance() const {
  if (direction == Direction::kXEqualsYPlusN) return noise_variance;
  return base_variance * noise_variance / (base_variance + noise_variance);
}

GaussianSource::GaussianSource(SourceModel model) : model_(model) { model_.validate(); }

void GaussianSource::sample(std::size_t count, Rng& rng, std::vector<double>& x,
                            std::vector<double>& y) const {
  x.resize(count);
  y.resize(count);
  const double base_sd = std::sqrt(model_.base_variance);
  const double noise_sd = std::sqrt(model_.noise_variance);
  for (std::size_t i = 0; i < count; ++i) {
    const double base = base_sd * rng.normal();
    const double noise = noise_sd * rng.normal();
    if (model_.direction == Direction::kXEqualsYPlusN) {
      y[i] = base;
      x[i] = base + noise;
    } else {
      x[i] = base;
      y[i] = base + noise;
    }
  }
}

SampleBatch sample_pairs(const SourceModel& model, std::size_t count, Rng& rng) {
  if (count < 1) throw UsageError("sample_pairs: count must be >= 1");
  SampleBatch batch;
  batch.seed = rng.seed();
  GaussianSource(model).sample(count, rng, batch.x, batch.y);
  return batch;
}

double wz_rd_distortion_db(const SourceModel& model, double rate_bits) {
  require_rate(rate_bits);
  return to_db(model.conditional_variance() * std::exp2(-2.0 * rate_bits));
}

double point_to_point_rd_db(const SourceModel& model, double rate_bits) {
  require_rate(rate_bits);
  return to_db(model.variance_x() * std::exp2(-2.0 * rate_bits));
}

double space_filling_offset_db() {
  return to_db(std::numbers::pi * std::numbers::e / 6.0);
}

std::vector<BaselineRow> baseline_curves(const SourceModel& model, double rate_min,
                                         double rate_max, double rate_step) {
  model.validate();
  require_rate(rate_min);
  if (!(rate_step > 0.0)) throw UsageError("rate step must be positive");
  if (rate_max < rate_min) throw UsageError("rate_max must be >= rate_min");
  std::vector<BaselineRow> rows;
  const double offset = space_filling_offset_db();
  // Index-based stepping so the endpoint is hit exactly when it lies on the grid.
  const auto steps = static_cast<long>(std::floor((rate_max - rate_min) / rate_step + 1e-9));
  for (long i = 0; i <= steps; ++i) {
    const double r = rate_min + static_cast<double>(i) * rate_step;
    const double wz = wz_rd_distortion_db(model, r);
    rows.push_back({r, wz, wz + offset, point_to_point_rd_db(model, r)});
  }
  return rows;
}

}  // namespace wz
