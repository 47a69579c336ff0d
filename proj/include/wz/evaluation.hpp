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
#include <functional>
#include <string>
#include <vector>

#include "wz/models.hpp"
#include "wz/sources.hpp"

namespace wz {

/// One evaluated (rate, distortion) pair with provenance.
struct RdPoint {
  double rate_bits = 0.0;
  double distortion_db = 0.0;
  double mse = 0.0;
  std::size_t sample_count = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  PriorKind prior_kind = PriorKind::kMarginal;
  bool infinite_rate = false;
};

/// u = argmax_v p(v | x), lowest index on ties.
std::size_t encode_deterministic(const WzSystem& system, double x);
std::vector<std::size_t> encode_deterministic(const WzSystem& system, std::span<const double> x);

/// One-hot rows for the given indices, (B x k).
Matrix one_hot(std::span<const std::size_t> u, int k);

struct EvalOptions {
  std::size_t samples = std::size_t{1} << 20;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  // Samples are drawn in fixed-size chunks with per-chunk derived seeds and
  // reduced in chunk order, so the result does not depend on `threads`.
  std::size_t chunk_size = std::size_t{1} << 16;
};

/// Sums over one set of samples; the building block of evaluate().
struct EvalSums {
  double rate_bits = 0.0;
  double squared_error = 0.0;
  std::size_t count = 0;
  bool infinite_rate = false;
};

/// Deterministic-mode rate (cross-entropy of u under the discrete prior) and
/// distortion (MSE of the one-hot decode) over explicit samples.
EvalSums evaluate_samples(const WzSystem& system, std::span<const double> x,
                          std::span<const double> y);

RdPoint evaluate(const WzSystem& system, const SourceModel& model, const EvalOptions& opts);

// Quantizer maps ------------------------------------------------------------

/// Maximal run of grid cells sharing one index; [first, last) cell indices and
/// the corresponding x extent (cell edges).
struct Interval {
  std::size_t first = 0;
  std::size_t last = 0;
  double x_begin = 0.0;
  double x_end = 0.0;
};

struct QuantizerMap {
  double x_min = 0.0;
  double x_max = 0.0;
  std::vector<double> x;  // cell centers
  std::vector<std::size_t> u;
  // Distinct indices in order of first appearance, each with its ordered runs.
  std::vector<std::size_t> indices;
  std::vector<std::vector<Interval>> intervals;

  std::size_t grid_size() const { return x.size(); }
  const std::vector<Interval>& intervals_of(std::size_t index) const;
};

/// Evaluates `encoder` at the centers of grid_size equal cells covering
/// [x_min, x_max) and run-length decomposes the result.
QuantizerMap quantizer_map(const std::function<std::size_t(double)>& encoder, double x_min,
                           double x_max, std::size_t grid_size);
QuantizerMap quantizer_map(const WzSystem& system, double x_min, double x_max,
                           std::size_t grid_size);

struct BinningScore {
  std::size_t discontiguous_bin_count = 0;
  double reuse_factor = 1.0;  // total intervals / distinct indices
};

BinningScore binning_score(const QuantizerMap& map);

// Decoder linearity -------------------------------------------------------

struct LinearFit {
  std::size_t u = 0;
  Interval interval;
  std::size_t support = 0;  // number of plausible y values used
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool degenerate = false;  // reconstruction constant over the support, r2 undefined
};

struct LinearityOptions {
  std::size_t samples = std::size_t{1} << 16;
  std::uint64_t seed = 0;
  std::size_t min_support = 10;
  double band_sigmas = 3.0;
};

struct LinearityReport {
  std::vector<LinearFit> fits;
  std::size_t skipped = 0;  // (u, interval) pairs with fewer than min_support samples
};

/// Least-squares fit of t on s. Degenerate when t has no spread.
LinearFit fit_line(std::span<const double> s, std::span<const double> t);

/// For every (u, interval) of the map, regresses the one-hot reconstruction
/// x_hat(u, y) on y over source samples whose x falls in the interval and whose
/// y lies within band_sigmas conditional standard deviations of E[Y | x].
LinearityReport decoder_linearity(const std::function<double(std::size_t, double)>& decoder,
                                  const QuantizerMap& map, const SourceModel& model,
                                  const LinearityOptions& opts);
LinearityReport decoder_linearity(const WzSystem& system, const QuantizerMap& map,
                                  const SourceModel& model, const LinearityOptions& opts);

/// Reconstruction x_hat(u, y) for every distinct u of the map on a y grid.
struct DecoderCurves {
  std::vector<std::size_t> u;
  std::vector<double> y;
  std::vector<std::vector<double>> x_hat;  // [index into u][index into y]
};

DecoderCurves decoder_curves(const WzSystem& system, const QuantizerMap& map, double y_min,
                             double y_max, std::size_t points);

/// Writes <prefix>map.csv, <prefix>curves.csv and <prefix>fits.csv.
void export_figure_data(const QuantizerMap& map, const DecoderCurves& curves,
                        const LinearityReport& fits, const std::string& prefix,
                        const std::string& provenance);

/// Parses a map.csv produced by export_figure_data back into (x, u) pairs.
std::vector<std::pair<double, std::size_t>> read_map_csv(const std::string& path);

}  // namespace wz
