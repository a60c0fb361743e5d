// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Fully factorized entropy model for the hyperprior latent: one learnable
// monotone univariate CDF per channel, built from three stacked affine
// stages with positivity-constrained slopes and bounded odd nonlinearities,
// squashed by a final logistic. Freshly initialized it is exactly the unit
// logistic CDF.

#ifndef SVRC_FACTORIZED_HPP_
#define SVRC_FACTORIZED_HPP_

#include <span>

#include "svrc/coding_table.hpp"
#include "svrc/stanh.hpp"
#include "svrc/tensor.hpp"

namespace svrc {

// Probability floor applied to every interval probability in training rates,
// consistent with the 16-bit coder precision.
constexpr double kProbabilityFloor = 1.0 / 65536.0;  // 2^-16
constexpr int kCoderPrecision = 16;

class FactorizedModel {
 public:
  // Per-channel parameter row layout (28 doubles):
  //   [0,3)   h1 raw (softplus -> positive input scales)
  //   [3,6)   b1
  //   [6,9)   a1 raw (tanh -> gate in (-1,1))
  //   [9,18)  h2 raw, 3x3 row-major
  //   [18,21) b2
  //   [21,24) a2 raw
  //   [24,27) h3 raw
  //   [27]    b3
  static constexpr int kParamsPerChannel = 28;
  static constexpr int kHidden = 3;

  FactorizedModel() = default;
  explicit FactorizedModel(int channels);

  int channels() const { return channels_; }
  Tensor& params() { return params_; }
  const Tensor& params() const { return params_; }

  double cdf(int channel, double x) const;
  // CDF value and its derivative in x.
  std::pair<double, double> cdf_with_slope(int channel, double x) const;
  // Accumulates upstream * d cdf / d params into grad_row (size 28) and
  // returns (cdf, upstream * d cdf / dx accumulated into *grad_x if set).
  double cdf_backward(int channel, double x, double upstream,
                      std::span<double> grad_row, double* grad_x) const;

  // c non-decreasing with c(-inf)=0, c(+inf)=1, probed at +/-1e6 and on a
  // value grid.
  bool monotone_ok() const;

 private:
  int channels_ = 0;
  Tensor params_;
};

// Total bits -sum log2 [c(v + r+) - c(v - r-)] of a (C,H,W) tensor under the
// model, with per-level bounds taken from the grid and probabilities floored
// at kProbabilityFloor. Differentiable with respect to z_soft and the model
// parameters.
Tensor factorized_rate(const Tensor& z_soft, const FactorizedModel& model,
                       const QuantizerGrid& grid);

// Training variant: interval bounds are derived from the (w, b) graph
// tensors of the hyper STanH layer, so the rate also shapes the quantizer.
Tensor factorized_rate(const Tensor& z_soft, const FactorizedModel& model,
                       const Tensor& w_node, const Tensor& b_node);

// One integer coding table per channel, discretizing the channel CDF over
// the grid's levels at the given precision.
std::vector<CodingTable> channel_coding_tables(const FactorizedModel& model,
                                               const QuantizerGrid& grid,
                                               int precision);

// Shared by the rate nodes: folds per-level gradients into step-weight
// gradients via d l_i / d w_j = [j < i] - 1/2.
void accumulate_level_grads(std::span<const double> grad_levels,
                            std::span<double> grad_w);

}  // namespace svrc

#endif  // SVRC_FACTORIZED_HPP_
