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

#include <cstddef>
#include <span>
#include <vector>

#include "wz/autodiff.hpp"
#include "wz/rng.hpp"

namespace wz {

/// Categorical distribution over K indices given by unnormalized log-probabilities.
/// Indices are zero-based throughout the library.
struct CategoricalHead {
  std::vector<double> logits;

  std::size_t size() const { return logits.size(); }
};

/// Relaxed one-hot sample: a point of the open simplex plus its temperature.
struct SoftSample {
  std::vector<double> weights;
  double temperature = 1.0;
};

/// Cross-entropy in bits. `infinite` is set when q puts zero mass where p does not;
/// `bits` is then +inf.
struct CrossEntropy {
  double bits = 0.0;
  bool infinite = false;
};

std::vector<double> log_probs(const CategoricalHead& head);
std::vector<double> probs(const CategoricalHead& head);

/// argmax_k (logits_k + noise_k); ties go to the lowest index.
std::size_t gumbel_max_with_noise(const CategoricalHead& head, std::span<const double> noise);
std::size_t gumbel_max_sample(const CategoricalHead& head, Rng& rng);

SoftSample concrete_with_noise(const CategoricalHead& head, double temperature,
                               std::span<const double> noise);
SoftSample concrete_sample(const CategoricalHead& head, double temperature, Rng& rng);

/// Most probable index, lowest index on ties.
std::size_t mode(const CategoricalHead& head);
std::size_t argmax(std::span<const double> values);

CrossEntropy cross_entropy_bits(std::span<const double> p, std::span<const double> q);
double entropy_bits(std::span<const double> p);

/// K i.i.d. standard Gumbel draws per row.
Matrix gumbel_noise(Eigen::Index rows, Eigen::Index k, Rng& rng);

// Graph-level relaxed sampling. All rows are independent examples.

/// log of the Concrete sample softmax((logits + noise) / t), (B x K).
Var concrete_log_sample(Graph& g, Var logits, const Matrix& noise, double temperature);

/// Log-density of the Concrete distribution with location `logits` and
/// temperature t, evaluated at the simplex point exp(log_sample). (B x 1)
///
///   log p = log (K-1)! + (K-1) log t + sum_k (a_k - (t+1) log s_k)
///           - K logsumexp_k (a_k - t log s_k)
///
/// The density is with respect to Lebesgue measure on the first K-1
/// coordinates of the simplex and is invariant to shifting all logits.
Var concrete_log_density(Graph& g, Var logits, Var log_sample, double temperature);

}  // namespace wz
