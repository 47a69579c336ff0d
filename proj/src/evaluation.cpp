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

#include "wz/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <thread>

#include "wz/csv.hpp"
#include "wz/distributions.hpp"
#include "wz/errors.hpp"

namespace wz {

namespace {

constexpr std::size_t kBlock = 4096;

Matrix column(std::span<const double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

std::vector<std::size_t> row_argmax(const Matrix& logits) {
  std::vector<std::size_t> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return out;
}

}  // namespace

std::size_t encode_deterministic(const WzSystem& system, double x) {
  CategoricalHead head{system.encoder_logits(x)};
  return mode(head);
}

std::vector<std::size_t> encode_deterministic(const WzSystem& system, std::span<const double> x) {
  std::vector<std::size_t> out;
  out.reserve(x.size());
  for (std::size_t start = 0; start < x.size(); start += kBlock) {
    const auto block = x.subspan(start, std::min(kBlock, x.size() - start));
    const auto u = row_argmax(system.encoder_logits(column(block)));
    out.insert(out.end(), u.begin(), u.end());
  }
  return out;
}

Matrix one_hot(std::span<const std::size_t> u, int k) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(u.size()), k);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] >= static_cast<std::size_t>(k)) throw UsageError("one_hot: index out of range");
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u[i])) = 1.0;
  }
  return m;
}

EvalSums evaluate_samples(const WzSystem& system, std::span<const double> x,
                          std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("evaluate: x and y lengths differ");
  EvalSums sums;
  const bool marginal = system.prior_kind() == PriorKind::kMarginal;
  const Matrix marginal_log_probs =
      marginal ? system.prior_log_probs(std::nullopt, 1) : Matrix();
  for (std::size_t start = 0; start < x.size(); start += kBlock) {
    const std::size_t n = std::min(kBlock, x.size() - start);
    const Matrix xb = column(x.subspan(start, n));
    const Matrix yb = column(y.subspan(start, n));
    const auto u = row_argmax(system.encoder_logits(xb));
    const Matrix log_q = marginal ? Matrix() : system.prior_log_probs(yb);
    const Matrix x_hat = system.decode(one_hot(u, system.k()), yb);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const auto col = static_cast<Eigen::Index>(u[i]);
      const double lq = marginal ? marginal_log_probs(0, col) : log_q(row, col);
      if (!std::isfinite(lq)) sums.infinite_rate = true;
      sums.rate_bits -= lq / std::numbers::ln2;
      const double err = xb(row, 0) - x_hat(row, 0);
      sums.squared_error += err * err;
    }
    sums.count += n;
  }
  return sums;
}

RdPoint evaluate(const WzSystem& system, const SourceModel& model, const EvalOptions& opts) {
  if (opts.samples < 1) throw UsageError("evaluate: sample count must be >= 1");
  if (opts.chunk_size < 1) throw UsageError("evaluate: chunk size must be >= 1");
  const GaussianSource source(model);
  const std::size_t chunks = (opts.samples + opts.chunk_size - 1) / opts.chunk_size;
  std::vector<EvalSums> partial(chunks);

  auto run_chunk = [&](std::size_t c) {
    const std::size_t n = std::min(opts.chunk_size, opts.samples - c * opts.chunk_size);
    Rng rng(derive_seed(opts.seed, c));
    std::vector<double> x, y;
    source.sample(n, rng, x, y);
    partial[c] = evaluate_samples(system, x, y);
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  EvalSums total;
  for (const auto& p : partial) {
    total.rate_bits += p.rate_bits;
    total.squared_error += p.squared_error;
    total.count += p.count;
    total.infinite_rate = total.infinite_rate || p.infinite_rate;
  }
  RdPoint point;
  point.sample_count = total.count;
  point.rate_bits = total.infinite_rate ? std::numeric_limits<double>::infinity()
                                        : total.rate_bits / static_cast<double>(total.count);
  point.mse = total.squared_error / static_cast<double>(total.count);
  point.distortion_db = 10.0 * std::log10(point.mse);
  point.infinite_rate = total.infinite_rate;
  point.lambda = system.meta.lambda;
  point.seed = system.meta.seed;
  point.prior_kind = system.prior_kind();
  return point;
}

// Quantizer maps ------------------------------------------------------------

const std::vector<Interval>& QuantizerMap::intervals_of(std::size_t index) const {
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] == index) return intervals[i];
  }
  throw UsageError("quantizer map: index " + std::to_string(index) + " not present");
}

namespace {

QuantizerMap decompose(double x_min, double x_max, std::vector<double> x,
                       std::vector<std::size_t> u) {
  QuantizerMap map;
  map.x_min = x_min;
  map.x_max = x_max;
  map.x = std::move(x);
  map.u = std::move(u);
  const double cell = (x_max - x_min) / static_cast<double>(map.x.size());
  std::map<std::size_t, std::size_t> slot;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= map.u.size(); ++i) {
    if (i < map.u.size() && map.u[i] == map.u[start]) continue;
    const std::size_t idx = map.u[start];
    auto [it, inserted] = slot.try_emplace(idx, map.indices.size());
    if (inserted) {
      map.indices.push_back(idx);
      map.intervals.emplace_back();
    }
    map.intervals[it->second].push_back(
        {start, i, x_min + static_cast<double>(start) * cell, x_min + static_cast<double>(i) * cell});
    start = i;
  }
  return map;
}

}  // namespace

QuantizerMap quantizer_map(const std::function<std::size_t(double)>& encoder, double x_min,
                           double x_max, std::size_t grid_size) {
  if (grid_size < 2) throw UsageError("quantizer_map: grid_size must be >= 2");
  if (!(x_max > x_min)) throw UsageError("quantizer_map: x_max must exceed x_min");
  const double cell = (x_max - x_min) / static_cast<double>(grid_size);
  std::vector<double> x(grid_size);
  std::vector<std::size_t> u(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    x[i] = x_min + (static_cast<double>(i) + 0.5) * cell;
    u[i] = encoder(x[i]);
  }
  return decompose(x_min, x_max, std::move(x), std::move(u));
}

QuantizerMap quantizer_map(const WzSystem& system, double x_min, double x_max,
                           std::size_t grid_size) {
  if (grid_size < 2) throw UsageError("quantizer_map: grid_size must be >= 2");
  if (!(x_max > x_min)) throw UsageError("quantizer_map: x_max must exceed x_min");
  const double cell = (x_max - x_min) / static_cast<double>(grid_size);
  std::vector<double> x(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) x[i] = x_min + (static_cast<double>(i) + 0.5) * cell;
  auto u = encode_deterministic(system, x);
  return decompose(x_min, x_max, std::move(x), std::move(u));
}

BinningScore binning_score(const QuantizerMap& map) {
  BinningScore score;
  std::size_t total = 0;
  for (const auto& runs : map.intervals) {
    total += runs.size();
    if (runs.size() >= 2) ++score.discontiguous_bin_count;
  }
  score.reuse_factor = map.indices.empty()
                           ? 1.0
                           : static_cast<double>(total) / static_cast<double>(map.indices.size());
  return score;
}

// Decoder linearity ---------------------------------------------------------

LinearFit fit_line(std::span<const double> s, std::span<const double> t) {
  if (s.size() != t.size() || s.size() < 2) throw UsageError("fit_line: need >= 2 paired samples");
  const auto n = static_cast<double>(s.size());
  double ms = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i];
    mt += t[i];
  }
  ms /= n;
  mt /= n;
  double sss = 0.0, stt = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sss += (s[i] - ms) * (s[i] - ms);
    stt += (t[i] - mt) * (t[i] - mt);
    sst += (s[i] - ms) * (t[i] - mt);
  }
  LinearFit fit;
  fit.support = s.size();
  fit.slope = sss > 0.0 ? sst / sss : 0.0;
  fit.intercept = mt - fit.slope * ms;
  // Spread below round-off of the mean counts as constant.
  const double tiny = 1e-24 * std::max(1.0, mt * mt) * n;
  if (stt <= tiny || sss <= 0.0) {
    fit.degenerate = true;
    fit.r2 = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double ss_res = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = t[i] - (fit.intercept + fit.slope * s[i]);
    ss_res += r * r;
  }
  fit.r2 = 1.0 - ss_res / stt;
  return fit;
}

LinearityReport decoder_linearity(const std::function<double(std::size_t, double)>& decoder,
                                  const QuantizerMap& map, const SourceModel& model,
                                  const LinearityOptions& opts) {
  model.validate();
  const double cov = model.base_variance;  // Cov(X, Y) for both directions
  const double gain = cov / model.variance_x();
  const double cond_sd = std::sqrt(model.variance_y() - cov * gain);

  Rng rng(opts.seed);
  std::vector<double> xs, ys;
  GaussianSource(model).sample(opts.samples, rng, xs, ys);

  // Bucket samples by grid cell so each interval gathers its own support.
  const double cell = (map.x_max - map.x_min) / static_cast<double>(map.grid_size());
  std::vector<std::vector<double>> by_cell(map.grid_size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double pos = (xs[i] - map.x_min) / cell;
    if (pos < 0.0 || pos >= static_cast<double>(map.grid_size())) continue;
    if (std::abs(ys[i] - gain * xs[i]) > opts.band_sigmas * cond_sd) continue;
    by_cell[static_cast<std::size_t>(pos)].push_back(ys[i]);
  }

  LinearityReport report;
  for (std::size_t j = 0; j < map.indices.size(); ++j) {
    const std::size_t u = map.indices[j];
    for (const Interval& iv : map.intervals[j]) {
      std::vector<double> y;
      for (std::size_t c = iv.first; c < iv.last; ++c) {
        y.insert(y.end(), by_cell[c].begin(), by_cell[c].end());
      }
      if (y.size() < opts.min_support || y.size() < 2) {
        ++report.skipped;
        continue;
      }
      std::vector<double> x_hat(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) x_hat[i] = decoder(u, y[i]);
      LinearFit fit = fit_line(y, x_hat);
      fit.u = u;
      fit.interval = iv;
      report.fits.push_back(fit);
    }
  }
  return report;
}

LinearityReport decoder_linearity(const WzSystem& system, const QuantizerMap& map,
                                  const SourceModel& model, const LinearityOptions& opts) {
  std::vector<double> onehot(static_cast<std::size_t>(system.k()));
  auto decoder = [&](std::size_t u, double y) {
    std::fill(onehot.begin(), onehot.end(), 0.0);
    onehot[u] = 1.0;
    return system.decode(onehot, y);
  };
  return decoder_linearity(decoder, map, model, opts);
}

DecoderCurves decoder_curves(const WzSystem& system, const QuantizerMap& map, double y_min,
                             double y_max, std::size_t points) {
  if (points < 2) throw UsageError("decoder_curves: need >= 2 points");
  DecoderCurves curves;
  curves.u = map.indices;
  std::sort(curves.u.begin(), curves.u.end());
  curves.y.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    curves.y[i] = y_min + (y_max - y_min) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  const Matrix y = column(curves.y);
  for (std::size_t u : curves.u) {
    const std::vector<std::size_t> idx(points, u);
    const Matrix x_hat = system.decode(one_hot(idx, system.k()), y);
    curves.x_hat.emplace_back(x_hat.data(), x_hat.data() + x_hat.size());
  }
  return curves;
}

void export_figure_data(const QuantizerMap& map, const DecoderCurves& curves,
                        const LinearityReport& fits, const std::string& prefix,
                        const std::string& provenance) {
  {
    CsvWriter csv(prefix + "map.csv", provenance, {"x", "u"});
    for (std::size_t i = 0; i < map.grid_size(); ++i) csv.cell(map.x[i]).cell(map.u[i]).end_row();
    csv.close();
  }
  {
    CsvWriter csv(prefix + "curves.csv", provenance, {"u", "y", "x_hat"});
    for (std::size_t j = 0; j < curves.u.size(); ++j) {
      for (std::size_t i = 0; i < curves.y.size(); ++i) {
        csv.cell(curves.u[j]).cell(curves.y[i]).cell(curves.x_hat[j][i]).end_row();
      }
    }
    csv.close();
  }
  {
    CsvWriter csv(prefix + "fits.csv", provenance,
                  {"u", "x_begin", "x_end", "support", "slope", "intercept", "r2", "degenerate"});
    for (const auto& f : fits.fits) {
      csv.cell(f.u).cell(f.interval.x_begin).cell(f.interval.x_end).cell(f.support);
      csv.cell(f.slope).cell(f.intercept).cell(f.r2).cell(f.degenerate ? 1 : 0).end_row();
    }
    csv.close();
  }
}

std::vector<std::pair<double, std::size_t>> read_map_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header != std::vector<std::string>{"x", "u"}) {
    throw FormatError("map csv: unexpected header in '" + path + "'");
  }
  std::vector<std::pair<double, std::size_t>> out;
  for (const auto& row : table.rows) {
    if (row.size() != 2) throw FormatError("map csv: malformed row");
    out.emplace_back(std::stod(row[0]), static_cast<std::size_t>(std::stoull(row[1])));
  }
  return out;
}

}  // namespace wz
