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

#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "wz/errors.hpp"
#include "wz/sources.hpp"

using namespace wz;

namespace {

SourceModel fig3a() { return {Direction::kXEqualsYPlusN, 1.0, 0.1}; }
SourceModel fig3b() { return {Direction::kYEqualsXPlusN, 1.0, 0.01}; }

struct Moments {
  double var_x = 0.0;
  double var_y = 0.0;
  double cov = 0.0;
  double mean_x = 0.0;
};

Moments moments(const SampleBatch& b) {
  Moments m;
  const double n = static_cast<double>(b.size());
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    sx += b.x[i];
    sy += b.y[i];
  }
  m.mean_x = sx / n;
  const double my = sy / n;
  for (std::size_t i = 0; i < b.size(); ++i) {
    m.var_x += (b.x[i] - m.mean_x) * (b.x[i] - m.mean_x);
    m.var_y += (b.y[i] - my) * (b.y[i] - my);
    m.cov += (b.x[i] - m.mean_x) * (b.y[i] - my);
  }
  m.var_x /= n;
  m.var_y /= n;
  m.cov /= n;
  return m;
}

}  // namespace

TEST_SUITE("sources") {
  TEST_CASE("model variances") {
    CHECK(fig3a().variance_x() == doctest::Approx(1.1));
    CHECK(fig3a().variance_y() == doctest::Approx(1.0));
    CHECK(fig3a().conditional_variance() == doctest::Approx(0.1));
    CHECK(fig3b().variance_x() == doctest::Approx(1.0));
    CHECK(fig3b().variance_y() == doctest::Approx(1.01));
    CHECK(fig3b().conditional_variance() == doctest::Approx(0.01 / 1.01));
  }

  TEST_CASE("model validation") {
    CHECK_THROWS_AS((SourceModel{Direction::kXEqualsYPlusN, 0.0, 0.1}).validate(), ConfigError);
    CHECK_THROWS_AS((SourceModel{Direction::kXEqualsYPlusN, 1.0, -0.1}).validate(), ConfigError);
    CHECK_THROWS_AS(direction_from_string("x=y"), ConfigError);
    CHECK(direction_from_string(to_string(Direction::kYEqualsXPlusN)) == Direction::kYEqualsXPlusN);
  }

  TEST_CASE("empirical moments for X = Y + N over 10^6 samples") {
    Rng rng(1);
    const SampleBatch b = sample_pairs(fig3a(), 1000000, rng);
    const Moments m = moments(b);
    CHECK(std::abs(m.var_x - 1.1) <= 0.01);
    CHECK(std::abs(m.cov - 1.0) <= 0.01);
    CHECK(std::abs(m.var_y - 1.0) <= 0.01);
    CHECK(std::abs(m.mean_x) <= 0.005);
  }

  TEST_CASE("empirical moments for Y = X + N over 10^6 samples") {
    Rng rng(2);
    const Moments m = moments(sample_pairs(fig3b(), 1000000, rng));
    CHECK(std::abs(m.var_x - 1.0) <= 0.01);
    CHECK(std::abs(m.cov - 1.0) <= 0.01);
    CHECK(std::abs(m.var_y - 1.01) <= 0.01);
  }

  TEST_CASE("vanishing noise gives x close to y") {
    Rng rng(3);
    const SampleBatch b = sample_pairs({Direction::kXEqualsYPlusN, 1.0, 1e-12}, 10000, rng);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(b.x[i] - b.y[i]) < 1e-4);
  }

  TEST_CASE("same seed gives identical batches, distinct seeds give independent ones") {
    Rng a(42);
    Rng b(42);
    const SampleBatch first = sample_pairs(fig3a(), 1000, a);
    const SampleBatch second = sample_pairs(fig3a(), 1000, b);
    CHECK(first.x == second.x);
    CHECK(first.y == second.y);

    Rng c(1001);
    Rng d(1002);
    const SampleBatch u = sample_pairs(fig3a(), 1000000, c);
    const SampleBatch v = sample_pairs(fig3a(), 1000000, d);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      sxy += u.x[i] * v.x[i];
      sxx += u.x[i] * u.x[i];
      syy += v.x[i] * v.x[i];
    }
    CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.01);
  }

  TEST_CASE("samples are finite and batches have equal lengths") {
    Rng rng(4);
    const SampleBatch b = sample_pairs(fig3b(), 4096, rng);
    CHECK(b.x.size() == 4096);
    CHECK(b.y.size() == 4096);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK((std::isfinite(b.x[i]) && std::isfinite(b.y[i])));
  }

  TEST_CASE("Wyner-Ziv endpoints from the plot tables") {
    CHECK(std::abs(wz_rd_distortion_db(fig3a(), 0.0) - (-10.0)) < 1e-6);
    CHECK(std::abs(wz_rd_distortion_db(fig3a(), 6.0) - (-46.12359948)) < 1e-6);
    CHECK(std::abs(wz_rd_distortion_db(fig3b(), 0.0) - (-20.043213737826427)) < 1e-6);
    CHECK(std::abs(wz_rd_distortion_db(fig3b(), 6.0) - (-56.16681321750417)) < 1e-6);
  }

  TEST_CASE("point-to-point endpoints from the plot tables") {
    CHECK(std::abs(point_to_point_rd_db(fig3a(), 0.0) - 0.41392685) < 1e-6);
    CHECK(std::abs(point_to_point_rd_db(fig3a(), 6.0) - (-35.70967263)) < 1e-6);
    CHECK(std::abs(point_to_point_rd_db(fig3b(), 0.0) - 0.0) < 1e-6);
    CHECK(std::abs(point_to_point_rd_db(fig3b(), 6.0) - (-36.12359947967774)) < 1e-6);
    CHECK(point_to_point_rd_db(fig3a(), 0.0) == doctest::Approx(10.0 * std::log10(1.1)));
  }

  TEST_CASE("space-filling offset") {
    const double expected = 10.0 * std::log10(std::numbers::pi * std::numbers::e / 6.0);
    CHECK(std::abs(space_filling_offset_db() - 1.532930) <= 1e-5);
    CHECK(space_filling_offset_db() == expected);
    CHECK(std::abs(wz_rd_distortion_db(fig3a(), 0.0) + space_filling_offset_db() -
                   (-8.46706895786258)) < 1e-6);
    CHECK(std::abs(wz_rd_distortion_db(fig3a(), 6.0) + space_filling_offset_db() -
                   (-44.59066843786258)) < 1e-6);
    CHECK(std::abs(wz_rd_distortion_db(fig3b(), 0.0) + space_filling_offset_db() -
                   (-18.510282695689007)) < 1e-6);
  }

  TEST_CASE("Wyner-Ziv slope is -20 log10(2) dB per bit") {
    const double slope = -20.0 * std::log10(2.0);
    for (double r = 0.0; r < 6.0; r += 0.25) {
      const double d = wz_rd_distortion_db(fig3a(), r + 0.25) - wz_rd_distortion_db(fig3a(), r);
      CHECK(d == doctest::Approx(0.25 * slope).epsilon(1e-12));
    }
  }

  TEST_CASE("negative rates are usage errors") {
    CHECK_THROWS_AS(wz_rd_distortion_db(fig3a(), -0.1), UsageError);
    CHECK_THROWS_AS(point_to_point_rd_db(fig3a(), -0.1), UsageError);
  }

  TEST_CASE("baseline curves") {
    const auto rows = baseline_curves(fig3a(), 0.0, 6.0, 0.5);
    REQUIRE(rows.size() == 13);
    CHECK(rows.front().rate_bits == 0.0);
    CHECK(rows.back().rate_bits == 6.0);
    for (const auto& r : rows) {
      CHECK(r.wz_db == wz_rd_distortion_db(fig3a(), r.rate_bits));
      CHECK(r.wz_plus_offset_db == doctest::Approx(r.wz_db + space_filling_offset_db()));
      CHECK(r.p2p_db == point_to_point_rd_db(fig3a(), r.rate_bits));
      CHECK(r.wz_db < r.wz_plus_offset_db);
      CHECK(r.wz_plus_offset_db < r.p2p_db);
    }
    CHECK_THROWS_AS(baseline_curves(fig3a(), 0.0, 6.0, 0.0), UsageError);
  }
}
