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

#include "wz/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wz/errors.hpp"

namespace wz {

namespace {

double max_of(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite logit");
  }
}

}  // namespace

std::vector<double> log_probs(const CategoricalHead& head) {
  if (head.size() == 0) throw ConfigError("categorical head needs K >= 1");
  require_finite(head.logits, "log_probs");
  const double m = max_of(head.logits);
  double total = 0.0;
  for (double a : head.logits) total += std::exp(a - m);
  const double lse = m + std::log(total);
  std::vector<double> out(head.size());
  for (std::size_t k = 0; k < head.size(); ++k) out[k] = head.logits[k] - lse;
  return out;
}

std::vector<double> probs(const CategoricalHead& head) {
  std::vector<double> out = log_probs(head);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ConfigError("argmax of empty range");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

std::size_t mode(const CategoricalHead& head) { return argmax(head.logits); }

std::size_t gumbel_max_with_noise(const CategoricalHead& head, std::span<const double> noise) {
  if (noise.size() != head.size()) throw ConfigError("gumbel_max: noise size != K");
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < head.size(); ++k) {
    const double v = head.logits[k] + noise[k];
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  return best;
}

std::size_t gumbel_max_sample(const CategoricalHead& head, Rng& rng) {
  std::vector<double> noise(head.size());
  for (double& g : noise) g = rng.gumbel();
  return gumbel_max_with_noise(head, noise);
}

SoftSample concrete_with_noise(const CategoricalHead& head, double temperature,
                               std::span<const double> noise) {
  if (!(temperature > 0.0)) throw ConfigError("concrete sample: temperature must be > 0");
  if (noise.size() != head.size()) throw ConfigError("concrete sample: noise size != K");
  CategoricalHead perturbed;
  perturbed.logits.resize(head.size());
  for (std::size_t k = 0; k < head.size(); ++k) {
    perturbed.logits[k] = (head.logits[k] + noise[k]) / temperature;
  }
  // Keep every weight strictly inside (0, 1); a dominant state would
  // otherwise round to exactly 1 and the others to 0.
  std::vector<double> w = probs(perturbed);
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  for (double& v : w) v = std::clamp(v, lo, hi);
  return SoftSample{std::move(w), temperature};
}

SoftSample concrete_sample(const CategoricalHead& head, double temperature, Rng& rng) {
  std::vector<double> noise(head.size());
  for (double& g : noise) g = rng.gumbel();
  return concrete_with_noise(head, temperature, noise);
}

CrossEntropy cross_entropy_bits(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ConfigError("cross_entropy: size mismatch");
  CrossEntropy out;
  double nats = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    if (q[k] <= 0.0) {
      out.infinite = true;
      out.bits = std::numeric_limits<double>::infinity();
      return out;
    }
    nats -= p[k] * std::log(q[k]);
  }
  out.bits = nats / std::numbers::ln2;
  return out;
}

double entropy_bits(std::span<const double> p) { return cross_entropy_bits(p, p).bits; }

Matrix gumbel_noise(Eigen::Index rows, Eigen::Index k, Rng& rng) {
  Matrix noise(rows, k);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) noise(i, j) = rng.gumbel();
  }
  return noise;
}

Var concrete_log_sample(Graph& g, Var logits, const Matrix& noise, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("concrete sample: temperature must be > 0");
  const Var perturbed = g.add(logits, g.constant(noise));
  return g.log_softmax(g.scale(perturbed, 1.0 / temperature));
}

Var concrete_log_density(Graph& g, Var logits, Var log_sample, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("concrete density: temperature must be > 0");
  const Eigen::Index rows = g.value(log_sample).rows();
  const auto k = static_cast<double>(g.value(log_sample).cols());
  const double log_norm = std::lgamma(k) + (k - 1.0) * std::log(temperature);
  const Var numer = g.row_sum(g.sub(logits, g.scale(log_sample, temperature + 1.0)));
  const Var denom = g.scale(g.logsumexp(g.sub(logits, g.scale(log_sample, temperature))), k);
  return g.add(g.sub(numer, denom), g.constant(Matrix::Constant(rows, 1, log_norm)));
}

}  // namespace wz
