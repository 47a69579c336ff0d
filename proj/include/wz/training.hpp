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
#include "wz/errors.hpp"
#include "wz/evaluation.hpp"
#include "wz/models.hpp"
#include "wz/rng.hpp"
#include "wz/sources.hpp"

namespace wz {

/// Exponential decay from `start` to `end` over the first `anneal_fraction`
/// of training, constant afterwards.
struct TemperatureSchedule {
  double start = 1.0;
  double end = 0.1;
  double anneal_fraction = 0.5;

  void validate() const;
  double at(std::int64_t step, std::int64_t total_steps) const;
  /// Fraction of the decay completed at `step`, in [0, 1].
  double progress(std::int64_t step, std::int64_t total_steps) const;
};

/// How the rate term of the training loss is computed.
///   kConcrete:    log-ratio of the two Concrete densities at the soft sample.
///   kCategorical: exact KL between the discrete p(u|x) and q(u[|y]); the soft
///                 sample then only feeds the decoder.
///   kCrossEntropy: exact E_p[-log q(u[|y])]; equals the evaluated rate once
///                 the encoder is deterministic.
///   kAnnealed:    KL + w * H(p(u|x)), w rising from 0 to 1 with the temperature
///                 schedule: starts as kCategorical, ends as kCrossEntropy.
enum class RateEstimator { kConcrete, kCategorical, kCrossEntropy, kAnnealed };

std::string to_string(RateEstimator e);
RateEstimator rate_estimator_from_string(const std::string& s);

struct TrainConfig {
  SystemConfig system;
  SourceModel source;
  double lambda = 20.0;
  int batch_size = 256;
  std::int64_t total_steps = 200000;
  double learning_rate = 1e-3;
  TemperatureSchedule temperature;
  RateEstimator rate_estimator = RateEstimator::kCategorical;
  std::uint64_t seed = 1;
  std::int64_t log_every = 1000;
  std::size_t eval_samples = std::size_t{1} << 20;
  unsigned eval_threads = 1;

  void validate() const;
};

struct TrainRecord {
  std::int64_t step = 0;  // last step of the interval, 1-based
  double loss = 0.0;       // interval means
  double rate_bits = 0.0;
  double distortion = 0.0;  // mean squared error
  double temperature = 0.0;
};

struct TrainReport {
  std::vector<TrainRecord> records;
  std::optional<RdPoint> final_point;
  double wall_seconds = 0.0;
};

/// Thrown by train() when the loss goes non-finite or the rate term blows up.
/// Carries the records collected so far.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, TrainReport partial)
      : NumericError(what), report(std::move(partial)) {}
  TrainReport report;
};

/// Graph nodes of one evaluation of a Lagrangian loss.
struct LossTerms {
  Var loss;        // scalar: mean(rate + lambda * distortion)
  Var rate;        // (B x 1) relaxed rate in nats
  Var distortion;  // (B x 1) squared error
};

/// Per-example relaxed rate log p(u|x) - log q(u[|y]) in nats, both terms
/// Concrete log-densities at the same soft sample. This is the one place the
/// relaxed rate is defined.
Var relaxed_rate_nats(Graph& g, Var encoder_logits, Var prior_logits, Var log_sample,
                      double temperature);

/// Per-example KL(p(u|x) || q(u[|y])) of the discrete distributions, in nats.
Var categorical_rate_nats(Graph& g, Var encoder_logits, Var prior_logits);

/// Per-example cross-entropy E_p[-log q(u[|y])] of the discrete distributions, in nats.
Var cross_entropy_rate_nats(Graph& g, Var encoder_logits, Var prior_logits);

/// Per-example KL + entropy_weight * H(p(u|x)), in nats.
Var annealed_rate_nats(Graph& g, Var encoder_logits, Var prior_logits, double entropy_weight);

/// Marginal Lagrangian with explicit Gumbel noise (B x K).
LossTerms loss_marginal(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                        double temperature, const Matrix& noise,
                        RateEstimator estimator = RateEstimator::kConcrete, double entropy_weight = 1.0);
LossTerms loss_marginal(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                        double temperature, Rng& rng,
                        RateEstimator estimator = RateEstimator::kConcrete);

/// Conditional Lagrangian: the prior is q(u | y).
LossTerms loss_conditional(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                           double temperature, const Matrix& noise,
                           RateEstimator estimator = RateEstimator::kConcrete,
                           double entropy_weight = 1.0);
LossTerms loss_conditional(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                           double temperature, Rng& rng,
                           RateEstimator estimator = RateEstimator::kConcrete);

/// Dispatches on the system's prior kind. `entropy_weight` is used by kAnnealed only.
LossTerms lagrangian(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                     double temperature, const Matrix& noise,
                     RateEstimator estimator = RateEstimator::kConcrete, double entropy_weight = 1.0);

struct TrainResult {
  WzSystem system;
  TrainReport report;
};

/// Adam on fresh batches for total_steps, then a deterministic-mode
/// evaluation on eval_samples fresh samples. Deterministic given the config.
TrainResult train(const TrainConfig& config);

/// Seed used for the run at `lambda` in a sweep with base seed `seed`.
std::uint64_t sweep_seed(std::uint64_t seed, double lambda);

struct SweepEntry {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::optional<RdPoint> point;
  std::string error;  // non-empty when the run failed
  std::string checkpoint_path;
};

struct SweepOptions {
  std::string output_dir;  // checkpoints and rd_curve.csv; empty = keep nothing on disk
  unsigned threads = 1;
  std::string provenance = "wzlearn";
};

/// One independent training run per lambda, results ordered by lambda.
std::vector<SweepEntry> sweep(const TrainConfig& base, std::vector<double> lambdas,
                              const SweepOptions& opts = {});

void write_sweep_csv(const std::vector<SweepEntry>& entries, const TrainConfig& base,
                     const std::string& path, const std::string& provenance);
void write_report_csv(const TrainReport& report, const std::string& path,
                      const std::string& provenance);

}  // namespace wz
