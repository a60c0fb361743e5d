// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// STanH parametric quantizer: a sum of L-1 translated, weighted hyperbolic
// tangents. Soft (finite beta) quantization is used during training; the
// exact ladder quantizer replaces it at inference.

#ifndef SVRC_STANH_HPP_
#define SVRC_STANH_HPP_

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "svrc/serialize.hpp"
#include "svrc/tensor.hpp"

namespace svrc {

// Reconstruction levels plus the distances from each level to its interval
// edges. The two extreme intervals extend to +/- infinity so the level
// probabilities always form a full partition of the real line.
struct QuantizerGrid {
  std::vector<double> levels;        // strictly increasing
  std::vector<double> left_bound;    // r-_i; left_bound[0] = +inf
  std::vector<double> right_bound;   // r+_i; right_bound[L-1] = +inf

  int level_count() const { return static_cast<int>(levels.size()); }
};

struct HardQuantizeResult {
  Tensor values;                 // reconstruction level per element
  std::vector<int32_t> indices;  // level id per element, 0..L-1
};

class StanhLayer {
 public:
  StanhLayer() = default;

  // Uniform L-level ladder whose reconstruction levels span [lo, hi]
  // symmetrically: every step weight is (hi-lo)/(L-1) and the boundaries
  // sit midway between consecutive levels. Note the level recursion pins
  // the first level at -(1/2)*sum(w), so the span is always centered on
  // zero; pass lo == -hi for the exact [lo, hi] cover.
  static StanhLayer init_uniform(int levels, double lo, double hi);

  // Builds a layer from explicit parameters; validates w > 0 and b strictly
  // increasing.
  static StanhLayer from_parameters(std::vector<double> w, std::vector<double> b);

  int levels() const { return levels_; }
  const std::vector<double>& step_weights() const { return w_; }
  const std::vector<double>& boundaries() const { return b_; }

  // l1 = -(1/2)*sum(w); l_i = l_{i-1} + w_{i-1}.
  std::vector<double> reconstruction_levels() const;

  QuantizerGrid grid() const;

  // Level id of the interval containing y; an element exactly on a boundary
  // maps to the upper level.
  int hard_index(double y) const;
  double hard_value(double y) const;

  // Parameter count is exactly 2*(L-1).
  int parameter_count() const { return 2 * (levels_ - 1); }

  // Trainable surface. The unconstrained raws guarantee w > 0 and sorted b
  // under gradient descent: w = exp(raw_w); b_0 = raw_b_0,
  // b_i = b_{i-1} + exp(raw_b_i).
  void set_trainable(bool trainable);
  bool trainable() const;
  Tensor& raw_step_weights() { return raw_w_; }
  Tensor& raw_boundaries() { return raw_b_; }
  const Tensor& raw_step_weights() const { return raw_w_; }
  const Tensor& raw_boundaries() const { return raw_b_; }

  // Graph tensors (w, b) derived from the raws; call once per training step
  // and feed to soft_quantize so gradients reach the raw parameters.
  std::pair<Tensor, Tensor> graph_parameters() const;

  // Recomputes the w/b snapshots after an optimizer step on the raws.
  void refresh_from_raw();

  // True when every reconstruction level lies strictly inside its own
  // interval (required for hard-quantize idempotence; always true for
  // uniform and sanely trained layers).
  bool levels_inside_intervals() const;

  void serialize(ByteWriter& w) const;              // "STNH" record
  static StanhLayer deserialize(ByteReader& r);

 private:
  void sync_raw_from_snapshot();

  int levels_ = 0;
  std::vector<double> w_;  // L-1 positive step weights
  std::vector<double> b_;  // L-1 strictly increasing boundaries
  Tensor raw_w_, raw_b_;
};

// Elementwise y~ = sum_i (w_i/2) * tanh(beta * (y - b_i)). When the layer is
// trainable (and gradients are enabled) the result participates in the
// autodiff graph with gradients flowing to y, w and b.
Tensor soft_quantize(const Tensor& y, const StanhLayer& layer, double beta);

// Variant taking pre-built (w, b) graph tensors, so one pair of parameter
// nodes can be shared across a whole batch.
Tensor soft_quantize(const Tensor& y, double beta, const Tensor& w_node,
                     const Tensor& b_node);

HardQuantizeResult hard_quantize(const Tensor& y, const StanhLayer& layer);

// Analytic gradients of the STanH sum, accumulated against an upstream
// cotangent:
//   d y~/d y   = sum_i (w_i/2) * beta * sech^2(beta (y - b_i))
//   d y~/d w_i = (1/2) * tanh(beta (y - b_i))
//   d y~/d b_i = -(w_i/2) * beta * sech^2(beta (y - b_i))
void stanh_gradients(std::span<const double> y, const std::vector<double>& w,
                     const std::vector<double>& b, double beta,
                     std::span<const double> upstream,
                     std::span<double> grad_y, std::span<double> grad_w,
                     std::span<double> grad_b);

// w3 = (1-rho)*w1 + rho*w2, b3 likewise. Positivity and monotonicity are
// closed under the convex combination.
StanhLayer interpolate(const StanhLayer& a, const StanhLayer& b, double rho);

// delta * round(y / delta), round-half-away-from-zero. The manual baseline
// quantizer the learned layers are compared against.
Tensor uniform_step_quantize(const Tensor& y, double delta);

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace svrc

#endif  // SVRC_STANH_HPP_
