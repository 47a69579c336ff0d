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

#include <array>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"
#include "wz/csv.hpp"
#include "wz/distributions.hpp"
#include "wz/errors.hpp"
#include "wz/evaluation.hpp"
#include "wz/training.hpp"

using namespace wz;
using wz::test::check_gradients;
using wz::test::TempDir;

namespace {

SystemConfig small_config(PriorKind kind, int k, int hidden) {
  SystemConfig c;
  c.k = k;
  c.prior_kind = kind;
  c.hidden_units = hidden;
  return c;
}

TrainConfig tiny_run(PriorKind kind) {
  TrainConfig cfg;
  cfg.system = small_config(kind, 8, 16);
  cfg.lambda = 10.0;
  cfg.batch_size = 32;
  cfg.total_steps = 100;
  cfg.log_every = 10;
  cfg.eval_samples = 4096;
  cfg.seed = 99;
  return cfg;
}

SampleBatch batch_of(std::size_t n, std::uint64_t seed, double noise = 0.1) {
  Rng rng(seed);
  return sample_pairs({Direction::kXEqualsYPlusN, 1.0, noise}, n, rng);
}

double mean_of(const Matrix& m) { return m.mean(); }

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("temperature schedule decays exponentially then holds") {
    TemperatureSchedule s;  // 1.0 -> 0.1 over the first half
    CHECK(s.at(0, 1000) == 1.0);
    CHECK(s.at(250, 1000) == doctest::Approx(std::sqrt(0.1)));
    CHECK(s.at(500, 1000) == doctest::Approx(0.1));
    CHECK(s.at(999, 1000) == doctest::Approx(0.1));
    CHECK(s.progress(0, 1000) == 0.0);
    CHECK(s.progress(250, 1000) == 0.5);
    CHECK(s.progress(500, 1000) == 1.0);
    CHECK(s.progress(900, 1000) == 1.0);
    double prev = 2.0;
    for (int step = 0; step < 1000; ++step) {
      const double t = s.at(step, 1000);
      CHECK(t <= prev);
      CHECK(t >= 0.1 - 1e-15);
      prev = t;
    }
    TemperatureSchedule bad;
    bad.start = 0.05;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TemperatureSchedule{};
    bad.end = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.total_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(rate_estimator_from_string("exact"), ConfigError);
    CHECK(rate_estimator_from_string("categorical") == RateEstimator::kCategorical);
    CHECK(to_string(RateEstimator::kConcrete) == "concrete");
    CHECK(rate_estimator_from_string("cross_entropy") == RateEstimator::kCrossEntropy);
    CHECK(to_string(RateEstimator::kCrossEntropy) == "cross_entropy");
    CHECK(rate_estimator_from_string("annealed") == RateEstimator::kAnnealed);
    CHECK(to_string(RateEstimator::kAnnealed) == "annealed");
  }

  TEST_CASE("losses check the prior kind") {
    WzSystem m(small_config(PriorKind::kMarginal, 4, 8), 1);
    WzSystem c(small_config(PriorKind::kConditional, 4, 8), 1);
    const SampleBatch b = batch_of(4, 1);
    Rng rng(1);
    Graph g;
    CHECK_THROWS_AS(loss_conditional(g, m, b, 1.0, 0.5, rng), UsageError);
    CHECK_THROWS_AS(loss_marginal(g, c, b, 1.0, 0.5, rng), UsageError);
  }

  TEST_CASE("with lambda = 0 the loss is the rate term") {
    WzSystem m(small_config(PriorKind::kMarginal, 4, 8), 2);
    const SampleBatch b = batch_of(16, 2);
    Rng rng(2);
    const Matrix noise = gumbel_noise(16, 4, rng);
    for (RateEstimator e : {RateEstimator::kConcrete, RateEstimator::kCategorical, RateEstimator::kCrossEntropy,
                            RateEstimator::kAnnealed}) {
      Graph g;
      const LossTerms t = loss_marginal(g, m, b, 0.0, 0.5, noise, e);
      CHECK(g.scalar(t.loss) == doctest::Approx(mean_of(g.value(t.rate))).epsilon(1e-14));
    }
  }

  TEST_CASE("minimizing the rate alone collapses the encoder onto one index") {
    for (RateEstimator e : {RateEstimator::kConcrete, RateEstimator::kCategorical, RateEstimator::kCrossEntropy,
                            RateEstimator::kAnnealed}) {
      WzSystem m(small_config(PriorKind::kMarginal, 4, 16), 3);
      // Start from a spread-out encoder so there is something to collapse.
      m.encoder.weights.back().value *= 20.0;
      Rng data(3);
      Rng noise(4);
      auto params = m.parameters();
      double first = 0.0;
      double last = 0.0;
      for (int step = 0; step < 1000; ++step) {
        const SampleBatch b = sample_pairs({}, 64, data);
        Graph g;
        const LossTerms t = loss_marginal(g, m, b, 0.0, 0.5, noise, e);
        if (step == 0) first = g.scalar(t.loss);
        last = g.scalar(t.loss);
        g.backward(t.loss);
        adam_step(params, AdamOptions{1e-2});
      }
      CHECK(first > 0.1);
      CHECK(last < 0.02 * first);
    }
  }

  TEST_CASE("deterministic encoder with its own marginal as prior: categorical rate equals H(u)") {
    // A hand-built quantizer: 4 cells on x, encoder logits +-A.
    WzSystem m(small_config(PriorKind::kMarginal, 4, 8), 5);
    const SampleBatch b = batch_of(20000, 5);
    std::vector<std::size_t> u(b.size());
    std::vector<double> counts(4, 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
      u[i] = b.x[i] < -0.7 ? 0 : b.x[i] < 0.0 ? 1 : b.x[i] < 0.7 ? 2 : 3;
      counts[u[i]] += 1.0;
    }
    const double n = static_cast<double>(b.size());
    double entropy_nats = 0.0;
    for (double c : counts) entropy_nats -= c / n * std::log(c / n);
    for (int k = 0; k < 4; ++k) m.marginal_logits.value(0, k) = std::log(counts[static_cast<std::size_t>(k)] / n);

    Graph g;
    Matrix enc = Matrix::Constant(static_cast<Eigen::Index>(b.size()), 4, -30.0);
    for (std::size_t i = 0; i < b.size(); ++i) enc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u[i])) = 30.0;
    const Var prior = m.prior_logits(g, std::nullopt, static_cast<Eigen::Index>(b.size()));
    const Var rate = categorical_rate_nats(g, g.constant(enc), prior);
    CHECK(mean_of(g.value(rate)) == doctest::Approx(entropy_nats).epsilon(1e-9));
    const Var ce = cross_entropy_rate_nats(g, g.constant(enc), prior);
    CHECK(mean_of(g.value(ce)) == doctest::Approx(entropy_nats).epsilon(1e-9));

    // The Concrete log-ratio has no such saturation: it grows with the
    // encoder's confidence.
    Rng rng(5);
    const Matrix noise = gumbel_noise(static_cast<Eigen::Index>(b.size()), 4, rng);
    const Var log_u = concrete_log_sample(g, g.constant(enc), noise, 0.5);
    const double relaxed = mean_of(g.value(relaxed_rate_nats(g, g.constant(enc), prior, log_u, 0.5)));
    CHECK(relaxed > entropy_nats + 1.0);
  }

  TEST_CASE("cross-entropy rate is the KL plus the encoder entropy") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index k = 2 + static_cast<Eigen::Index>(trial % 9);
      const Matrix enc = wz::test::random_matrix(8, k, rng, 2.0);
      const Matrix prior = wz::test::random_matrix(8, k, rng, 2.0);
      Graph g;
      const Matrix kl = g.value(categorical_rate_nats(g, g.constant(enc), g.constant(prior)));
      const Matrix ce = g.value(cross_entropy_rate_nats(g, g.constant(enc), g.constant(prior)));
      for (Eigen::Index i = 0; i < 8; ++i) {
        double h = 0.0;
        double norm = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) norm += std::exp(enc(i, j));
        for (Eigen::Index j = 0; j < k; ++j) {
          const double p = std::exp(enc(i, j)) / norm;
          h -= p * std::log(p);
        }
        CHECK(ce(i, 0) == doctest::Approx(kl(i, 0) + h).epsilon(1e-12));
        CHECK(ce(i, 0) >= kl(i, 0));
      }
      const double w = 0.1 * trial / 2.0;
      const Matrix mid = g.value(annealed_rate_nats(g, g.constant(enc), g.constant(prior), w));
      const Matrix lo = g.value(annealed_rate_nats(g, g.constant(enc), g.constant(prior), 0.0));
      const Matrix hi = g.value(annealed_rate_nats(g, g.constant(enc), g.constant(prior), 1.0));
      for (Eigen::Index i = 0; i < 8; ++i) {
        CHECK(lo(i, 0) == doctest::Approx(kl(i, 0)).epsilon(1e-12));
        CHECK(hi(i, 0) == doctest::Approx(ce(i, 0)).epsilon(1e-12));
        CHECK(mid(i, 0) == doctest::Approx((1.0 - w) * kl(i, 0) + w * ce(i, 0)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("conditional loss with a y-independent prior equals the marginal loss") {
    const SystemConfig mc = small_config(PriorKind::kMarginal, 6, 12);
    const SystemConfig cc = small_config(PriorKind::kConditional, 6, 12);
    WzSystem m(mc, 6);
    WzSystem c(cc, 6);
    c.encoder = m.encoder;
    c.decoder = m.decoder;
    Rng rng(6);
    for (int k = 0; k < 6; ++k) m.marginal_logits.value(0, k) = rng.normal();
    c.conditional_prior.weights.back().value.setZero();
    c.conditional_prior.biases.back().value = m.marginal_logits.value;

    const SampleBatch b = batch_of(32, 6);
    const Matrix noise = gumbel_noise(32, 6, rng);
    for (RateEstimator e : {RateEstimator::kConcrete, RateEstimator::kCategorical, RateEstimator::kCrossEntropy,
                            RateEstimator::kAnnealed}) {
      Graph gm;
      Graph gc;
      const double lm = gm.scalar(loss_marginal(gm, m, b, 7.0, 0.4, noise, e).loss);
      const double lc = gc.scalar(loss_conditional(gc, c, b, 7.0, 0.4, noise, e).loss);
      CHECK(lc == doctest::Approx(lm).epsilon(1e-12));
    }
  }

  TEST_CASE("per-y optimal prior never costs more than the best marginal prior") {
    // Brute force on a discretized problem: frozen deterministic encoders with
    // K <= 8 cells, y quantized to 64 levels. The optimal q(u) is the marginal
    // of u and the optimal q(u | y-level) its conditional.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed + 200);
      const int k = 2 + static_cast<int>(seed % 7);
      WzSystem m(small_config(PriorKind::kMarginal, k, 8), seed);
      m.encoder.weights.back().value *= 10.0;
      const SampleBatch b = batch_of(20000, seed + 300);
      const auto u = encode_deterministic(m, b.x);
      std::vector<double> marginal(static_cast<std::size_t>(k), 0.0);
      std::vector<std::vector<double>> joint(64, std::vector<double>(static_cast<std::size_t>(k), 0.0));
      auto level = [](double y) {
        return static_cast<std::size_t>(std::clamp(std::floor((y + 3.2) / 0.1), 0.0, 63.0));
      };
      for (std::size_t i = 0; i < b.size(); ++i) {
        marginal[u[i]] += 1.0;
        joint[level(b.y[i])][u[i]] += 1.0;
      }
      const double n = static_cast<double>(b.size());
      double rate_marginal = 0.0;
      double rate_conditional = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) {
        const auto& row = joint[level(b.y[i])];
        double row_total = 0.0;
        for (double v : row) row_total += v;
        rate_marginal -= std::log2(marginal[u[i]] / n);
        rate_conditional -= std::log2(row[u[i]] / row_total);
      }
      CHECK(rate_conditional <= rate_marginal + 1e-9);
      double distinct = 0.0;
      for (double v : marginal) distinct += v > 0 ? 1.0 : 0.0;
      if (distinct > 1.0) CHECK(rate_conditional < rate_marginal);
    }
  }

  TEST_CASE("hard-sample rate is a cross-entropy bound, tight at the empirical marginal") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const int k = 2 + static_cast<int>(seed % 7);
      WzSystem m(small_config(PriorKind::kMarginal, k, 8), seed + 40);
      m.encoder.weights.back().value *= 10.0;
      const SampleBatch b = batch_of(10000, seed + 41);
      const auto u = encode_deterministic(m, b.x);
      std::vector<double> freq(static_cast<std::size_t>(k), 0.0);
      for (std::size_t s : u) freq[s] += 1.0 / static_cast<double>(u.size());
      const double h = entropy_bits(freq);

      Rng rng(seed);
      for (int trial = 0; trial < 5; ++trial) {
        for (int j = 0; j < k; ++j) m.marginal_logits.value(0, j) = rng.normal();
        const EvalSums s = evaluate_samples(m, b.x, b.y);
        CHECK(s.rate_bits / static_cast<double>(s.count) >= h - 1e-12);
      }
      for (int j = 0; j < k; ++j) {
        m.marginal_logits.value(0, j) = freq[static_cast<std::size_t>(j)] > 0 ? std::log(freq[static_cast<std::size_t>(j)]) : -700.0;
      }
      const EvalSums s = evaluate_samples(m, b.x, b.y);
      CHECK(s.rate_bits / static_cast<double>(s.count) == doctest::Approx(h).epsilon(1e-9));
    }
  }

  TEST_CASE("full losses match finite differences with frozen noise on 100 configurations") {
    double worst = 0.0;
    int redrawn = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed + 500);
      const PriorKind kind = seed % 2 == 0 ? PriorKind::kMarginal : PriorKind::kConditional;
      const RateEstimator est = std::array{RateEstimator::kConcrete, RateEstimator::kCategorical,
                                           RateEstimator::kCrossEntropy, RateEstimator::kAnnealed}[(seed / 2) % 4];
      const double entropy_weight = rng.uniform();
      const int k = 2 + static_cast<int>(rng.next_u64() % 7);
      WzSystem sys(small_config(kind, k, 6), seed);
      if (kind == PriorKind::kMarginal) {
        for (int j = 0; j < k; ++j) sys.marginal_logits.value(0, j) = rng.normal();
      }
      const double lambda = 0.5 + 20.0 * rng.uniform();
      const double t = 0.1 + rng.uniform();
      SampleBatch b;
      Matrix noise;
      for (std::uint64_t draw = 0;; ++draw) {
        b = batch_of(4, seed * 1000 + draw + 600);
        noise = gumbel_noise(4, k, rng);
        Matrix x(4, 1);
        Matrix y(4, 1);
        for (Eigen::Index i = 0; i < 4; ++i) {
          x(i, 0) = b.x[static_cast<std::size_t>(i)];
          y(i, 0) = b.y[static_cast<std::size_t>(i)];
        }
        Graph g;
        const Var soft = g.exp(concrete_log_sample(g, g.constant(sys.encoder_logits(x)), noise, t));
        Matrix dec_in(4, k + 1);
        dec_in << g.value(soft), y;
        double margin = std::min(wz::test::min_abs_preactivation(sys.encoder, x),
                                 wz::test::min_abs_preactivation(sys.decoder, dec_in));
        if (kind == PriorKind::kConditional) {
          margin = std::min(margin, wz::test::min_abs_preactivation(sys.conditional_prior, y));
        }
        if (margin > 1e-3) break;
        ++redrawn;
      }
      const auto fd = check_gradients(sys.parameters(), [&](Graph& g) {
        return lagrangian(g, sys, b, lambda, t, noise, est, entropy_weight).loss;
      });
      worst = std::max(worst, fd.max_rel_error);
      CHECK_MESSAGE(fd.max_rel_error < 1e-4, "seed ", seed);
    }
    MESSAGE("worst relative error over losses: ", worst, " (", redrawn, " draws rejected near a kink)");
  }

  TEST_CASE("default-size marginal loss on a batch of 4 matches finite differences") {
    WzSystem sys(SystemConfig{}, 7);
    Rng rng(7);
    for (int j = 0; j < 16; ++j) sys.marginal_logits.value(0, j) = rng.normal();
    const SampleBatch b = batch_of(4, 7);
    const Matrix noise = gumbel_noise(4, 16, rng);
    const auto fd = check_gradients(sys.parameters(), [&](Graph& g) {
      return loss_marginal(g, sys, b, 20.0, 0.5, noise).loss;
    });
    CHECK(fd.entries == sys.parameter_count());
    CHECK(fd.max_rel_error < 1e-4);
  }

  TEST_CASE("tiny run completes with ordered records") {
    const TrainResult r = train(tiny_run(PriorKind::kMarginal));
    REQUIRE(r.report.records.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(r.report.records[i].step == static_cast<std::int64_t>(10 * (i + 1)));
    CHECK(r.report.records.back().step == 100);
    REQUIRE(r.report.final_point.has_value());
    CHECK(r.report.final_point->sample_count == 4096);
    CHECK(r.system.meta.steps == 100);
    CHECK(r.system.meta.lambda == 10.0);
    CHECK(r.system.meta.seed == 99);
  }

  TEST_CASE("same config and seed reproduce bit-identical systems and reports") {
    for (PriorKind kind : {PriorKind::kMarginal, PriorKind::kConditional}) {
      const TrainResult a = train(tiny_run(kind));
      const TrainResult b = train(tiny_run(kind));
      CHECK(serialize_checkpoint(a.system) == serialize_checkpoint(b.system));
      REQUIRE(a.report.records.size() == b.report.records.size());
      for (std::size_t i = 0; i < a.report.records.size(); ++i) {
        CHECK(std::memcmp(&a.report.records[i], &b.report.records[i], sizeof(TrainRecord)) == 0);
      }
      CHECK(a.report.final_point->rate_bits == b.report.final_point->rate_bits);
      CHECK(a.report.final_point->distortion_db == b.report.final_point->distortion_db);
    }
  }

  TEST_CASE("divergence aborts with the records collected so far") {
    TrainConfig cfg = tiny_run(PriorKind::kMarginal);
    cfg.lambda = 1e300;
    cfg.log_every = 1;
    try {
      train(cfg);
      FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
      CHECK(std::string(e.what()).find("diverged") != std::string::npos);
    }
  }

  TEST_CASE("sweep: ordering, single-lambda consistency, failures and CSV") {
    TempDir dir("sweep");
    TrainConfig base = tiny_run(PriorKind::kMarginal);
    CHECK_THROWS_AS(sweep(base, {}), UsageError);

    SweepOptions opts;
    opts.output_dir = dir.file("out");
    opts.provenance = "test";
    const auto entries = sweep(base, {30.0, 1e300, 5.0}, opts);
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].lambda == 5.0);
    CHECK(entries[1].lambda == 30.0);
    CHECK(entries[2].lambda == 1e300);
    CHECK(entries[0].point.has_value());
    CHECK(entries[1].point.has_value());
    CHECK_FALSE(entries[2].point.has_value());
    CHECK_FALSE(entries[2].error.empty());
    CHECK(entries[0].seed != entries[1].seed);

    TrainConfig direct = base;
    direct.lambda = 5.0;
    direct.seed = sweep_seed(base.seed, 5.0);
    const TrainResult r = train(direct);
    CHECK(r.report.final_point->rate_bits == entries[0].point->rate_bits);
    CHECK(r.report.final_point->distortion_db == entries[0].point->distortion_db);
    CHECK(serialize_checkpoint(load_checkpoint(entries[0].checkpoint_path)) == serialize_checkpoint(r.system));

    const CsvTable csv = read_csv(opts.output_dir + "/rd_curve.csv");
    CHECK(csv.header == std::vector<std::string>{"lambda", "K", "seed", "steps", "rate_bits", "distortion_db", "checkpoint_path"});
    REQUIRE(csv.rows.size() == 3);
    CHECK(csv.rows[0][0] == "5");
    CHECK(csv.rows[2][4] == "nan");
  }

  TEST_CASE("sweep results do not depend on the number of threads") {
    TrainConfig base = tiny_run(PriorKind::kConditional);
    SweepOptions one;
    SweepOptions three;
    three.threads = 3;
    const auto a = sweep(base, {2.0, 8.0, 32.0}, one);
    const auto b = sweep(base, {2.0, 8.0, 32.0}, three);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a[i].point->rate_bits == b[i].point->rate_bits);
      CHECK(a[i].point->distortion_db == b[i].point->distortion_db);
    }
  }
}
