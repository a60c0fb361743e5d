// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include <cmath>
#include <fstream>

#include <doctest.h>

#include "svrc/eval.hpp"
#include "svrc/synthetic.hpp"
#include "testutil.hpp"

using namespace svrc;

TEST_CASE("psnr point values") {
  Tensor x = to_tensor(make_synthetic_image(32, 24, 1));
  CHECK(psnr(x, x) == kLosslessPsnr);

  // Every 8-bit pixel off by exactly one step: 20*log10(255).
  std::vector<double> shifted = x.values();
  for (double& v : shifted) v = v >= 0.5 ? v - 1.0 / 255.0 : v + 1.0 / 255.0;
  Tensor off = Tensor::from_values(x.shape(), std::move(shifted));
  CHECK(psnr(x, off) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-9));
  CHECK(psnr(x, off) == doctest::Approx(48.1308).epsilon(1e-4));

  CHECK_THROWS_AS(psnr(x, Tensor::zeros({3, 2, 2})), std::invalid_argument);
}

TEST_CASE("psnr matches a nested-loop MSE oracle") {
  Rng rng(5);
  Tensor a = test::random_tensor(rng, {3, 9, 7}, 0, 1);
  Tensor b = test::random_tensor(rng, {3, 9, 7}, 0, 1);
  double mse = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 7; ++x) {
        const size_t i = (static_cast<size_t>(c) * 9 + y) * 7 + x;
        const double d = a.values()[i] - b.values()[i];
        mse += d * d;
      }
    }
  }
  mse /= 3 * 9 * 7;
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));
}

TEST_CASE("psnr decreases monotonically with noise amplitude") {
  Rng rng(6);
  Tensor x = to_tensor(make_synthetic_image(48, 48, 2));
  double prev = kLosslessPsnr + 1;
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    std::vector<double> noisy = x.values();
    Rng noise_rng(7);
    for (double& v : noisy) v = std::clamp(v + amp * (noise_rng.uniform() - 0.5), 0.0, 1.0);
    const double value = psnr(x, Tensor::from_values(x.shape(), std::move(noisy)));
    CHECK(value < prev);
    prev = value;
  }
}

TEST_CASE("bits_per_pixel arithmetic") {
  CHECK(bits_per_pixel(1000, 100, 100) == doctest::Approx(0.8));
  CHECK(bits_per_pixel(32, 32, 32) == doctest::Approx(0.25));  // header-only stream
  CHECK_THROWS_AS(bits_per_pixel(10, 0, 5), std::invalid_argument);
}

namespace {

std::vector<RdPoint> sample_curve() {
  return {{"p1", 0.25, 30.0}, {"p2", 0.50, 33.5}, {"p3", 0.85, 36.0},
          {"p4", 1.40, 38.0}, {"p5", 2.10, 39.5}};
}

std::vector<RdPoint> scaled_rate(const std::vector<RdPoint>& curve, double factor) {
  std::vector<RdPoint> out = curve;
  for (RdPoint& p : out) p.bpp *= factor;
  return out;
}

}  // namespace

TEST_CASE("bd metrics point values") {
  auto a = sample_curve();
  BdResult same = bd_metrics(a, a);
  CHECK(same.bd_rate_percent == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(same.bd_psnr_db == doctest::Approx(0.0).epsilon(1e-12));

  // Constant 10% rate inflation at identical quality integrates exactly.
  BdResult worse = bd_metrics(a, scaled_rate(a, 1.10));
  CHECK(worse.bd_rate_percent == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(worse.bd_psnr_db < 0.0);

  BdResult better = bd_metrics(scaled_rate(a, 1.10), a);
  CHECK(better.bd_rate_percent == doctest::Approx(100.0 / 1.1 - 100.0).epsilon(1e-6));
}

TEST_CASE("bd metrics sign antisymmetry") {
  auto a = sample_curve();
  std::vector<RdPoint> b = {{"q1", 0.30, 30.5}, {"q2", 0.60, 34.2}, {"q3", 0.95, 36.3},
                            {"q4", 1.55, 38.4}, {"q5", 2.40, 40.1}};
  BdResult ab = bd_metrics(a, b);
  BdResult ba = bd_metrics(b, a);
  CHECK(ab.bd_psnr_db == doctest::Approx(-ba.bd_psnr_db).epsilon(1e-9));
}

TEST_CASE("bd metrics rejects bad inputs") {
  auto a = sample_curve();
  std::vector<RdPoint> three(a.begin(), a.begin() + 3);
  CHECK_THROWS_AS(bd_metrics(a, three), std::invalid_argument);

  std::vector<RdPoint> disjoint = {{"r1", 0.1, 10.0}, {"r2", 0.2, 12.0},
                                   {"r3", 0.3, 14.0}, {"r4", 0.4, 16.0}};
  CHECK_THROWS_AS(bd_metrics(a, disjoint), std::invalid_argument);
}

TEST_CASE("interval report labels, offsets and widths") {
  StanhLayer uniform = StanhLayer::init_uniform(9, -4, 4);
  StanhLayer wide = StanhLayer::from_parameters({1, 1, 2, 2, 1, 1},
                                                {-2.5, -1.5, 0, 2, 3, 4});
  std::vector<std::pair<std::string, StanhLayer>> layers = {{"A1", uniform}};
  IntervalReport report = interval_report(layers, 3);
  REQUIRE(report.rows.size() == 3);
  for (const IntervalRow& row : report.rows) {
    CHECK(row.width == doctest::Approx(1.0));  // uniform step
    CHECK(row.label == "A1");
  }
  CHECK(report.rows[0].offset == -1);
  CHECK(report.rows[1].offset == 0);
  CHECK(report.rows[1].value == doctest::Approx(0.0));

  // center_count = L reports every level, tails included (infinite width).
  IntervalReport full = interval_report(layers, 9);
  CHECK(full.rows.size() == 9);
  CHECK(std::isinf(full.rows.front().width));
  CHECK(std::isinf(full.rows.back().width));

  std::vector<std::pair<std::string, StanhLayer>> mismatched = {{"A1", uniform},
                                                                {"D1", wide}};
  CHECK_THROWS_AS(interval_report(mismatched, 3), std::invalid_argument);
}

TEST_CASE("interval widths partition consistently with the grid") {
  Rng rng(9);
  StanhLayer layer = StanhLayer::init_uniform(11, -5, 5);
  std::vector<std::pair<std::string, StanhLayer>> layers = {{"L", layer}};
  IntervalReport report = interval_report(layers, 11);
  const QuantizerGrid grid = layer.grid();
  // Interior widths sum to the span between the outermost boundaries.
  double width_sum = 0.0;
  for (const IntervalRow& row : report.rows) {
    if (std::isfinite(row.width)) width_sum += row.width;
  }
  CHECK(width_sum == doctest::Approx(layer.boundaries().back() -
                                     layer.boundaries().front()));
}

TEST_CASE("csv writers emit header rows and dot decimals") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "svrc_eval_csv";
  fs::create_directories(dir);
  std::vector<RdPoint> points = {{"A1", 0.5, 31.25}};
  write_rd_csv(dir / "rd_points.csv", points);
  std::ifstream in(dir / "rd_points.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "label,bpp,psnr");
  CHECK(row == "A1,0.5,31.25");
  fs::remove_all(dir);
}
