// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include <cmath>

#include <doctest.h>

#include "svrc/annealing.hpp"
#include "svrc/stanh.hpp"
#include "testutil.hpp"

using namespace svrc;

TEST_CASE("quantization gap point values") {
  Tensor y = Tensor::from_values({1}, {0.0});
  Tensor y_soft = Tensor::from_values({1}, {0.1});
  Tensor y_hard = Tensor::from_values({1}, {0.3});
  // soft error 0.01, hard error 0.09, gap 0.08
  auto [e_soft, e_hard] = quantization_errors(y, y_soft, y_hard);
  CHECK(e_soft == doctest::Approx(0.01));
  CHECK(e_hard == doctest::Approx(0.09));
  CHECK(quantization_gap(y, y_soft, y_hard) == doctest::Approx(0.08));

  CHECK(quantization_gap(y, y_hard, y_hard) == doctest::Approx(0.0));
  CHECK_THROWS_AS(quantization_gap(y, Tensor::zeros({2}), y_hard), std::invalid_argument);
}

TEST_CASE("gap shrinks as beta grows (numeric sweep)") {
  Rng rng(7);
  StanhLayer layer = StanhLayer::init_uniform(8, -4, 4);
  Tensor y = test::random_tensor(rng, {32}, -4, 4);
  Tensor hard = hard_quantize(y, layer).values;
  const double gap_low = quantization_gap(y, soft_quantize(y, layer, 1.0), hard);
  const double gap_high = quantization_gap(y, soft_quantize(y, layer, 100.0), hard);
  CHECK(gap_high <= gap_low);
}

TEST_CASE("first step returns beta 1 with ceiling 1") {
  AnnealingState state(99, 15.0);
  const double beta = state.step(123.0);  // gap ignored on the first call
  CHECK(beta == 1.0);
  CHECK(state.beta_max() == 1.0);
  CHECK(state.beta_current() == 1.0);
}

TEST_CASE("ceiling grows by K * gap and the draw stays inside it") {
  AnnealingState state(1, 15.0);
  state.step(0.0);
  const double beta = state.step(0.02);
  CHECK(state.beta_max() == doctest::Approx(1.3));
  CHECK(beta >= 1.0);
  CHECK(beta <= 1.3);

  const double before = state.beta_max();
  state.step(0.0);  // zero gap leaves the ceiling unchanged
  CHECK(state.beta_max() == before);

  CHECK_THROWS_AS(state.step(-1.0), std::invalid_argument);
}

TEST_CASE("ceiling equals 1 + K * sum of gaps exactly") {
  Rng rng(11);
  const double k = 15.0;
  AnnealingState state(5, k);
  state.step(0.0);
  std::vector<double> gaps;
  for (int i = 0; i < 2000; ++i) {
    gaps.push_back(rng.uniform(0.0, 0.4));
    state.step(gaps.back());
  }
  double sum = 0.0;
  for (double g : gaps) sum += g;
  CHECK(state.beta_max() == 1.0 + k * sum);  // bitwise, no drift
}

TEST_CASE("beta stays in [1, beta_max] over a million draws") {
  AnnealingState state(2026, 15.0);
  state.step(0.0);
  state.step(100.0);  // ceiling 1501
  const double ceiling = state.beta_max();
  for (int i = 0; i < 1000000; ++i) {
    const double beta = state.step(0.0);
    REQUIRE(beta >= 1.0);
    REQUIRE(beta <= ceiling);
  }
}

TEST_CASE("identical seed and gap sequence reproduce the beta sequence") {
  auto run = [] {
    AnnealingState state(77, 15.0);
    std::vector<double> betas;
    betas.push_back(state.step(0.0));
    for (int i = 0; i < 100; ++i) betas.push_back(state.step(0.01 * i));
    return betas;
  };
  CHECK(run() == run());
}

TEST_CASE("two states with different seeds evolve independently") {
  AnnealingState a(1, 15.0), b(2, 15.0);
  a.step(0.0);
  b.step(0.0);
  std::vector<double> va, vb;
  for (int i = 0; i < 50; ++i) {
    va.push_back(a.step(0.5));
    vb.push_back(b.step(0.5));
  }
  CHECK(a.beta_max() == b.beta_max());  // same deterministic ceiling
  CHECK(va != vb);                      // different draws
}

TEST_CASE("velocity doubling folds the running sum") {
  AnnealingState state(3, 15.0);
  state.step(0.0);
  state.step(1.0);  // ceiling 16
  const double before = state.beta_max();
  state.double_velocity();
  CHECK(state.beta_max() == doctest::Approx(before));  // ceiling preserved
  CHECK(state.velocity() == 30.0);
  state.step(1.0);
  CHECK(state.beta_max() == doctest::Approx(before + 30.0));
}

TEST_CASE("resumed state starts from the given ceiling") {
  AnnealingState state = AnnealingState::resume(9, 15.0, 250.0);
  CHECK(state.beta_max() == doctest::Approx(250.0));
  const double beta = state.step(0.0);  // no beta_1 = 1 reset
  CHECK(beta >= 1.0);
  CHECK(beta <= 250.0);
}
