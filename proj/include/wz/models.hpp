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
#include <optional>
#include <string>
#include <vector>

#include "wz/autodiff.hpp"
#include "wz/rng.hpp"
#include "wz/sources.hpp"

namespace wz {

/// Dense feed-forward network. Every layer but the last is followed by a
/// leaky ReLU; the last layer is linear.
class Mlp {
 public:
  Mlp() = default;
  /// dims = {input, hidden..., output}. Weights uniform in +-sqrt(6 / (fan_in + fan_out)),
  /// biases zero.
  Mlp(std::vector<int> dims, double slope, Rng& rng, const std::string& name);

  /// Plain evaluation, (B x input) -> (B x output).
  Matrix forward(const Matrix& input) const;
  /// Records the evaluation on `g` so gradients reach the weights.
  Var forward(Graph& g, Var input);

  const std::vector<int>& dims() const { return dims_; }
  double slope() const { return slope_; }
  std::size_t parameter_count() const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  // Layer i maps dims[i] -> dims[i + 1]; weights are (dims[i+1] x dims[i]).
  std::vector<Parameter> weights;
  std::vector<Parameter> biases;

 private:
  std::vector<int> dims_;
  double slope_ = 0.01;
};

enum class PriorKind { kMarginal, kConditional };

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

struct SystemConfig {
  int k = 16;
  PriorKind prior_kind = PriorKind::kMarginal;
  int hidden_units = 100;
  int hidden_layers = 2;  // dense layers before the output layer
  double slope = 0.01;

  void validate() const;
  std::vector<int> dims(int input, int output) const;
};

/// Provenance echoed into checkpoints.
struct SystemMeta {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  SourceModel source;
};

/// Encoder p(u|x), prior q(u) or q(u|y), and decoder g(u, y).
class WzSystem {
 public:
  WzSystem() = default;
  WzSystem(const SystemConfig& config, std::uint64_t init_seed);

  const SystemConfig& config() const { return config_; }
  int k() const { return config_.k; }
  PriorKind prior_kind() const { return config_.prior_kind; }

  /// (B x 1) -> (B x K)
  Matrix encoder_logits(const Matrix& x) const;
  std::vector<double> encoder_logits(double x) const;

  /// Marginal: y must be absent. Conditional: y must be present. (B x K) log-probabilities.
  Matrix prior_log_probs(const std::optional<Matrix>& y, Eigen::Index rows = 1) const;
  std::vector<double> prior_log_probs(std::optional<double> y) const;

  /// u is (B x K) simplex rows, y is (B x 1); returns (B x 1) reconstructions.
  Matrix decode(const Matrix& u, const Matrix& y) const;
  double decode(std::span<const double> u, double y) const;

  /// Graph versions used by the losses.
  Var encoder_logits(Graph& g, Var x);
  /// Returns (B x K) prior logits; marginal logits are broadcast to `rows`.
  Var prior_logits(Graph& g, std::optional<Var> y, Eigen::Index rows);
  Var decode(Graph& g, Var u, Var y);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

  Mlp encoder;
  Mlp decoder;
  Parameter marginal_logits;  // (1 x K), used when prior_kind == kMarginal
  Mlp conditional_prior;      // 1 -> K, used when prior_kind == kConditional
  SystemMeta meta;

 private:
  SystemConfig config_;
};

/// Checkpoint layout (all integers little-endian):
///   "WZCK" | u32 version | u64 header length | header (JSON text)
///   | parameter values as f64, in parameters() order | u64 FNV-1a of all preceding bytes
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const WzSystem& system);
WzSystem deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const WzSystem& system, const std::string& path);
WzSystem load_checkpoint(const std::string& path);

}  // namespace wz
