// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/annealing.hpp"

#include <cmath>
#include <stdexcept>

namespace svrc {

std::pair<double, double> quantization_errors(const Tensor& y,
                                              const Tensor& y_soft,
                                              const Tensor& y_hard) {
  if (y.shape() != y_soft.shape() || y.shape() != y_hard.shape()) {
    throw std::invalid_argument("quantization_gap: tensor shapes differ");
  }
  double e_soft = 0.0, e_hard = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    const double ds = y_soft.values()[i] - y.values()[i];
    const double dh = y_hard.values()[i] - y.values()[i];
    e_soft += ds * ds;
    e_hard += dh * dh;
  }
  return {e_soft, e_hard};
}

double quantization_gap(const Tensor& y, const Tensor& y_soft,
                        const Tensor& y_hard) {
  auto [e_soft, e_hard] = quantization_errors(y, y_soft, y_hard);
  return std::abs(e_hard - e_soft);
}

AnnealingState::AnnealingState(uint64_t seed, double velocity)
    : rng_(seed), velocity_(velocity) {
  if (!(velocity > 0.0)) throw std::invalid_argument("AnnealingState: velocity must be > 0");
}

AnnealingState AnnealingState::resume(uint64_t seed, double velocity,
                                      double beta_max) {
  if (!(beta_max >= 1.0)) throw std::invalid_argument("AnnealingState: ceiling must be >= 1");
  AnnealingState s(seed, velocity);
  s.frozen_offset_ = beta_max - 1.0;
  s.t_ = 1;  // skip the beta_1 = 1 special case
  return s;
}

double AnnealingState::step(double gap) {
  if (gap < 0.0) throw std::invalid_argument("AnnealingState::step: negative gap");
  ++t_;
  if (t_ == 1) {
    beta_current_ = 1.0;
    return beta_current_;
  }
  gap_sum_ += gap;
  beta_current_ = 1.0 + rng_.uniform() * (beta_max() - 1.0);
  return beta_current_;
}

void AnnealingState::double_velocity() {
  frozen_offset_ += velocity_ * gap_sum_;
  gap_sum_ = 0.0;
  velocity_ *= 2.0;
}

}  // namespace svrc
