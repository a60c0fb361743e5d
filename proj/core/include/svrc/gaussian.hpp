// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Gaussian conditional rate model for the main latent: the probability of a
// value is the Gaussian mass over its quantization interval,
// Phi(y + r+) - Phi(y - r-), with the variable bounds supplied by the STanH
// grid instead of the fixed +/-0.5 of integer rounding.

#ifndef SVRC_GAUSSIAN_HPP_
#define SVRC_GAUSSIAN_HPP_

#include <span>
#include <vector>

#include "svrc/coding_table.hpp"
#include "svrc/factorized.hpp"
#include "svrc/stanh.hpp"
#include "svrc/tensor.hpp"

namespace svrc {

// Interval probability Phi((y + r_plus - mu)/sigma) - Phi((y - r_minus - mu)/sigma),
// clamped below at kProbabilityFloor. Infinite bounds integrate the full
// tail. Rejects sigma <= 0.
double gaussian_interval_probability(double y, double mu, double sigma,
                                     double r_minus, double r_plus);

// Total bits of a tensor under elementwise Gaussian interval probabilities,
// with bounds from the fixed grid. Differentiable in y_soft, mu and sigma.
Tensor gaussian_rate(const Tensor& y_soft, const Tensor& mu, const Tensor& sigma,
                     const QuantizerGrid& grid);

// Training variant with bounds derived from the main layer's (w, b) graph
// tensors; gradients also flow into the quantizer parameters.
Tensor gaussian_rate(const Tensor& y_soft, const Tensor& mu, const Tensor& sigma,
                     const Tensor& w_node, const Tensor& b_node);

// 64 geometrically spaced sigma values; the decoder rebuilds bit-exact
// coding tables from these, so sigma is never transmitted continuously.
std::vector<double> make_scale_table(double lo, double hi, int count);

// Index of the scale-table entry nearest to sigma (clamped at the ends).
int snap_scale_index(double sigma, std::span<const double> scale_table);

// One coding table per element: sigma snapped to the scale table, mu at full
// precision, probabilities over the grid's levels. Both encoder and decoder
// derive mu and sigma deterministically from the decoded hyperprior, so the
// tables agree bit-exactly.
std::vector<CodingTable> conditional_tables(const Tensor& mu, const Tensor& sigma,
                                            const QuantizerGrid& grid,
                                            std::span<const double> scale_table,
                                            int precision);

}  // namespace svrc

#endif  // SVRC_GAUSSIAN_HPP_
