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

#include "wz/training.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "wz/csv.hpp"
#include "wz/distributions.hpp"

namespace wz {

void TemperatureSchedule::validate() const {
  if (!(end > 0.0)) throw ConfigError("temperature end must be > 0");
  if (!(start >= end)) throw ConfigError("temperature start must be >= end");
  if (!(anneal_fraction > 0.0 && anneal_fraction <= 1.0)) {
    throw ConfigError("temperature anneal_fraction must lie in (0, 1]");
  }
}

double TemperatureSchedule::progress(std::int64_t step, std::int64_t total_steps) const {
  const double horizon = anneal_fraction * static_cast<double>(total_steps);
  return std::min(1.0, static_cast<double>(step) / std::max(horizon, 1.0));
}

double TemperatureSchedule::at(std::int64_t step, std::int64_t total_steps) const {
  return start * std::pow(end / start, progress(step, total_steps));
}

void TrainConfig::validate() const {
  system.validate();
  source.validate();
  temperature.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (eval_samples < 1) throw ConfigError("eval_samples must be >= 1");
}

Var relaxed_rate_nats(Graph& g, Var encoder_logits, Var prior_logits, Var log_sample,
                      double temperature) {
  return g.sub(concrete_log_density(g, encoder_logits, log_sample, temperature),
               concrete_log_density(g, prior_logits, log_sample, temperature));
}

Var categorical_rate_nats(Graph& g, Var encoder_logits, Var prior_logits) {
  const Var log_p = g.log_softmax(encoder_logits);
  const Var log_q = g.log_softmax(prior_logits);
  return g.row_sum(g.mul(g.exp(log_p), g.sub(log_p, log_q)));
}

Var cross_entropy_rate_nats(Graph& g, Var encoder_logits, Var prior_logits) {
  const Var p = g.exp(g.log_softmax(encoder_logits));
  return g.scale(g.row_sum(g.mul(p, g.log_softmax(prior_logits))), -1.0);
}

Var annealed_rate_nats(Graph& g, Var encoder_logits, Var prior_logits, double entropy_weight) {
  const Var log_p = g.log_softmax(encoder_logits);
  const Var p = g.exp(log_p);
  // KL + w H(p) = sum p (log p - log q) - w sum p log p
  const Var log_q = g.log_softmax(prior_logits);
  return g.row_sum(g.mul(p, g.sub(g.scale(log_p, 1.0 - entropy_weight), log_q)));
}

std::string to_string(RateEstimator e) {
  switch (e) {
    case RateEstimator::kConcrete: return "concrete";
    case RateEstimator::kCategorical: return "categorical";
    case RateEstimator::kCrossEntropy: return "cross_entropy";
    case RateEstimator::kAnnealed: return "annealed";
  }
  return "unknown";
}

RateEstimator rate_estimator_from_string(const std::string& s) {
  if (s == "concrete") return RateEstimator::kConcrete;
  if (s == "categorical") return RateEstimator::kCategorical;
  if (s == "cross_entropy") return RateEstimator::kCrossEntropy;
  if (s == "annealed") return RateEstimator::kAnnealed;
  throw ConfigError("unknown rate estimator '" + s +
                    "' (expected concrete, categorical, cross_entropy or annealed)");
}

namespace {

// Every step allocates and frees the same set of batch-sized matrices. Keep
// them on the heap instead of round-tripping through mmap/munmap.
void tune_allocator() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)once;
#endif
}

Matrix column(const std::vector<double>& v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

LossTerms build_loss(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                     double temperature, const Matrix& noise, RateEstimator estimator,
                     double entropy_weight) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  const auto rows = static_cast<Eigen::Index>(batch.size());
  if (noise.rows() != rows || noise.cols() != system.k()) {
    throw ConfigError("loss: noise must be (batch x K)");
  }
  const Var x = g.constant(column(batch.x));
  const Var y = g.constant(column(batch.y));
  const Var enc = system.encoder_logits(g, x);
  const Var log_u = concrete_log_sample(g, enc, noise, temperature);
  const Var prior = system.prior_kind() == PriorKind::kMarginal
                        ? system.prior_logits(g, std::nullopt, rows)
                        : system.prior_logits(g, y, rows);
  Var rate;
  switch (estimator) {
    case RateEstimator::kConcrete: rate = relaxed_rate_nats(g, enc, prior, log_u, temperature); break;
    case RateEstimator::kCategorical: rate = categorical_rate_nats(g, enc, prior); break;
    case RateEstimator::kCrossEntropy: rate = cross_entropy_rate_nats(g, enc, prior); break;
    case RateEstimator::kAnnealed: rate = annealed_rate_nats(g, enc, prior, entropy_weight); break;
  }
  const Var x_hat = system.decode(g, g.exp(log_u), y);
  const Var distortion = g.square(g.sub(x, x_hat));
  const Var loss = g.mean(g.add(rate, g.scale(distortion, lambda)));
  return {loss, rate, distortion};
}

}  // namespace

LossTerms loss_marginal(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                        double temperature, const Matrix& noise,
                        RateEstimator estimator, double entropy_weight) {
  if (system.prior_kind() != PriorKind::kMarginal) {
    throw UsageError("loss_marginal requires a marginal-prior system");
  }
  return build_loss(g, system, batch, lambda, temperature, noise, estimator, entropy_weight);
}

LossTerms loss_marginal(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                        double temperature, Rng& rng, RateEstimator estimator) {
  return loss_marginal(g, system, batch, lambda, temperature,
                       gumbel_noise(static_cast<Eigen::Index>(batch.size()), system.k(), rng),
                       estimator);
}

LossTerms loss_conditional(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                           double temperature, const Matrix& noise,
                           RateEstimator estimator, double entropy_weight) {
  if (system.prior_kind() != PriorKind::kConditional) {
    throw UsageError("loss_conditional requires a conditional-prior system");
  }
  return build_loss(g, system, batch, lambda, temperature, noise, estimator, entropy_weight);
}

LossTerms loss_conditional(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                           double temperature, Rng& rng, RateEstimator estimator) {
  return loss_conditional(g, system, batch, lambda, temperature,
                          gumbel_noise(static_cast<Eigen::Index>(batch.size()), system.k(), rng),
                       estimator);
}

LossTerms lagrangian(Graph& g, WzSystem& system, const SampleBatch& batch, double lambda,
                     double temperature, const Matrix& noise, RateEstimator estimator,
                     double entropy_weight) {
  return build_loss(g, system, batch, lambda, temperature, noise, estimator, entropy_weight);
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  tune_allocator();
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  TrainResult result{WzSystem(config.system, derive_seed(config.seed, 1)), {}};
  WzSystem& system = result.system;
  system.meta.lambda = config.lambda;
  system.meta.seed = config.seed;
  system.meta.source = config.source;

  Rng data_rng(derive_seed(config.seed, 2));
  Rng noise_rng(derive_seed(config.seed, 3));
  const GaussianSource source(config.source);
  const AdamOptions adam{config.learning_rate};
  const double rate_limit_bits = std::log2(static_cast<double>(config.system.k)) + 5.0;
  auto params = system.parameters();

  SampleBatch batch;
  TrainRecord acc;
  std::int64_t acc_count = 0;
  for (std::int64_t step = 1; step <= config.total_steps; ++step) {
    const double t = config.temperature.at(step - 1, config.total_steps);
    source.sample(static_cast<std::size_t>(config.batch_size), data_rng, batch.x, batch.y);
    const Matrix noise = gumbel_noise(config.batch_size, config.system.k, noise_rng);

    auto diverged = [&](const std::string& why) {
      result.report.wall_seconds = elapsed();
      return TrainingDiverged("training diverged at step " + std::to_string(step) + ": " + why,
                              std::move(result.report));
    };
    Graph g;
    LossTerms terms;
    try {
      terms = lagrangian(g, system, batch, config.lambda, t, noise, config.rate_estimator,
                         config.temperature.progress(step - 1, config.total_steps));
    } catch (const NumericError& e) {
      throw diverged(e.what());
    }
    const double loss = g.scalar(terms.loss);
    const double rate_bits = g.value(terms.rate).mean() / std::numbers::ln2;
    const double distortion = g.value(terms.distortion).mean();
    if (!std::isfinite(loss) || !std::isfinite(rate_bits) || rate_bits > rate_limit_bits) {
      throw diverged("loss=" + format_double(loss) + " rate_bits=" + format_double(rate_bits));
    }
    g.backward(terms.loss);
    adam_step(params, adam);
    system.meta.steps = step;

    acc.loss += loss;
    acc.rate_bits += rate_bits;
    acc.distortion += distortion;
    acc.temperature += t;
    ++acc_count;
    if (step % config.log_every == 0 || step == config.total_steps) {
      const auto n = static_cast<double>(acc_count);
      result.report.records.push_back(
          {step, acc.loss / n, acc.rate_bits / n, acc.distortion / n, acc.temperature / n});
      acc = {};
      acc_count = 0;
    }
  }

  EvalOptions eval;
  eval.samples = config.eval_samples;
  eval.seed = derive_seed(config.seed, 4);
  eval.threads = config.eval_threads;
  result.report.final_point = evaluate(system, config.source, eval);
  result.report.wall_seconds = elapsed();
  return result;
}

std::uint64_t sweep_seed(std::uint64_t seed, double lambda) {
  return derive_seed(seed, std::bit_cast<std::uint64_t>(lambda));
}

std::vector<SweepEntry> sweep(const TrainConfig& base, std::vector<double> lambdas,
                              const SweepOptions& opts) {
  if (lambdas.empty()) throw UsageError("sweep: lambda list is empty");
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("sweep: lambda values must be > 0");
  }
  base.validate();
  std::sort(lambdas.begin(), lambdas.end());
  if (!opts.output_dir.empty()) std::filesystem::create_directories(opts.output_dir);

  std::vector<SweepEntry> entries(lambdas.size());
  auto run = [&](std::size_t i) {
    SweepEntry& e = entries[i];
    e.lambda = lambdas[i];
    e.seed = sweep_seed(base.seed, lambdas[i]);
    TrainConfig cfg = base;
    cfg.lambda = e.lambda;
    cfg.seed = e.seed;
    try {
      TrainResult r = train(cfg);
      e.point = r.report.final_point;
      if (!opts.output_dir.empty()) {
        e.checkpoint_path =
            (std::filesystem::path(opts.output_dir) / ("lambda_" + format_double(e.lambda) + ".wzck"))
                .string();
        save_checkpoint(r.system, e.checkpoint_path);
      }
    } catch (const Error& err) {
      e.error = err.what();
    }
  };

  const unsigned threads =
      std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(lambdas.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < lambdas.size(); i = next++) run(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  if (!opts.output_dir.empty()) {
    write_sweep_csv(entries, base, (std::filesystem::path(opts.output_dir) / "rd_curve.csv").string(),
                    opts.provenance);
  }
  return entries;
}

void write_sweep_csv(const std::vector<SweepEntry>& entries, const TrainConfig& base,
                     const std::string& path, const std::string& provenance) {
  CsvWriter csv(path, provenance,
                {"lambda", "K", "seed", "steps", "rate_bits", "distortion_db", "checkpoint_path"});
  for (const auto& e : entries) {
    csv.cell(e.lambda).cell(base.system.k).cell(static_cast<unsigned long long>(e.seed));
    csv.cell(static_cast<long long>(base.total_steps));
    if (e.point) {
      csv.cell(e.point->rate_bits).cell(e.point->distortion_db);
    } else {
      csv.cell(std::string("nan")).cell(std::string("nan"));
    }
    csv.cell(e.error.empty() ? e.checkpoint_path : "error: diverged").end_row();
  }
  csv.close();
}

void write_report_csv(const TrainReport& report, const std::string& path,
                      const std::string& provenance) {
  CsvWriter csv(path, provenance, {"step", "loss", "rate_bits", "distortion", "temperature"});
  for (const auto& r : report.records) {
    csv.cell(static_cast<long long>(r.step)).cell(r.loss).cell(r.rate_bits);
    csv.cell(r.distortion).cell(r.temperature).end_row();
  }
  csv.close();
}

}  // namespace wz
