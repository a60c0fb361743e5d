// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Semi-deterministic inverse-temperature schedule. The ceiling grows with
// the measured soft/hard quantization gap and each step's beta is drawn
// uniformly from [1, ceiling]. One state per STanH layer; the two layers of
// a codec anneal independently.

#ifndef SVRC_ANNEALING_HPP_
#define SVRC_ANNEALING_HPP_

#include <cstdint>

#include "svrc/random.hpp"
#include "svrc/tensor.hpp"

namespace svrc {

// E_t = | ||y_hat - y||^2 - ||y_soft - y||^2 | over the whole batch.
double quantization_gap(const Tensor& y, const Tensor& y_soft,
                        const Tensor& y_hard);

// The two squared errors separately (soft first), for callers accumulating
// the gap across a batch before taking the absolute difference.
std::pair<double, double> quantization_errors(const Tensor& y,
                                              const Tensor& y_soft,
                                              const Tensor& y_hard);

class AnnealingState {
 public:
  // Fresh schedule: the first step() returns beta = 1 with ceiling 1.
  AnnealingState(uint64_t seed, double velocity);

  // Resumed schedule (used when refining a derivation): the ceiling starts
  // at the anchor's final value instead of 1, so the already near-frozen
  // latent is not thawed.
  static AnnealingState resume(uint64_t seed, double velocity, double beta_max);

  // First call returns 1; afterwards the ceiling grows by K * E_t and beta
  // is drawn uniformly from [1, ceiling]. Rejects negative gaps.
  double step(double gap);

  // Exactly 1 + K * sum(E_t): kept as an explicit accumulator so no
  // floating-point drift creeps in across steps.
  double beta_max() const { return 1.0 + frozen_offset_ + velocity_ * gap_sum_; }
  double beta_current() const { return beta_current_; }
  double velocity() const { return velocity_; }
  uint64_t step_count() const { return t_; }

  // Folds the accumulated sum into an offset and doubles K (the first
  // plateau of the training loss doubles the freezing velocity).
  void double_velocity();

 private:
  Rng rng_;
  double velocity_;
  double gap_sum_ = 0.0;
  double frozen_offset_ = 0.0;
  double beta_current_ = 1.0;
  uint64_t t_ = 0;
};

}  // namespace svrc

#endif  // SVRC_ANNEALING_HPP_
