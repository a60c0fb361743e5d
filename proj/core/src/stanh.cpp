// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/stanh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace svrc {

namespace {

constexpr uint8_t kStanhFormatVersion = 1;

void validate_parameters(const std::vector<double>& w, const std::vector<double>& b) {
  if (w.size() != b.size() || w.empty()) {
    throw std::invalid_argument("StanhLayer: w and b must both have L-1 entries");
  }
  for (double wi : w) {
    if (!(wi > 0.0) || !std::isfinite(wi)) {
      throw std::invalid_argument("StanhLayer: step weights must be positive and finite");
    }
  }
  for (size_t i = 0; i + 1 < b.size(); ++i) {
    if (!(b[i] < b[i + 1])) {
      throw std::invalid_argument("StanhLayer: boundaries must be strictly increasing");
    }
  }
  for (double bi : b) {
    if (!std::isfinite(bi)) throw std::invalid_argument("StanhLayer: non-finite boundary");
  }
}

// b_0 = raw_0; b_i = b_{i-1} + exp(raw_i). Backward: every b_i depends on
// raw_0 with derivative 1, and on raw_j (j>=1, j<=i) with derivative
// exp(raw_j), so grad_raw_j is a suffix sum of grad_b scaled by exp(raw_j).
Tensor increasing_sequence(const Tensor& raw) {
  const auto& r = raw.values();
  std::vector<double> b(r.size());
  b[0] = r[0];
  for (size_t i = 1; i < r.size(); ++i) b[i] = b[i - 1] + std::exp(r[i]);
  return make_node(raw.shape(), std::move(b), {raw}, [](detail::Node& self) {
    auto* gr = self.parent_grad(0);
    if (!gr) return;
    const auto& r = self.parents[0]->values;
    double suffix = 0.0;
    for (size_t i = self.size(); i-- > 1;) {
      suffix += self.grad[i];
      (*gr)[i] += suffix * std::exp(r[i]);
    }
    (*gr)[0] += suffix + self.grad[0];
  });
}

}  // namespace

StanhLayer StanhLayer::init_uniform(int levels, double lo, double hi) {
  if (levels < 2) throw std::invalid_argument("init_uniform: need at least 2 levels");
  if (!(lo < hi)) throw std::invalid_argument("init_uniform: lo must be < hi");
  const double step = (hi - lo) / (levels - 1);
  std::vector<double> w(levels - 1, step);
  // Boundaries are midpoints between consecutive reconstruction levels.
  std::vector<double> b(levels - 1);
  const double l1 = -0.5 * step * (levels - 1);
  for (int i = 0; i < levels - 1; ++i) b[i] = l1 + step * i + step / 2.0;
  return from_parameters(std::move(w), std::move(b));
}

StanhLayer StanhLayer::from_parameters(std::vector<double> w, std::vector<double> b) {
  validate_parameters(w, b);
  StanhLayer layer;
  layer.levels_ = static_cast<int>(w.size()) + 1;
  layer.w_ = std::move(w);
  layer.b_ = std::move(b);
  layer.sync_raw_from_snapshot();
  return layer;
}

void StanhLayer::sync_raw_from_snapshot() {
  std::vector<double> rw(w_.size()), rb(b_.size());
  for (size_t i = 0; i < w_.size(); ++i) rw[i] = std::log(w_[i]);
  rb[0] = b_[0];
  for (size_t i = 1; i < b_.size(); ++i) rb[i] = std::log(b_[i] - b_[i - 1]);
  raw_w_ = Tensor::from_values({static_cast<int>(rw.size())}, std::move(rw));
  raw_b_ = Tensor::from_values({static_cast<int>(rb.size())}, std::move(rb));
}

void StanhLayer::set_trainable(bool trainable) {
  raw_w_.set_requires_grad(trainable);
  raw_b_.set_requires_grad(trainable);
}

bool StanhLayer::trainable() const {
  return raw_w_.defined() && raw_w_.requires_grad();
}

std::pair<Tensor, Tensor> StanhLayer::graph_parameters() const {
  return {svrc::exp(raw_w_), increasing_sequence(raw_b_)};
}

void StanhLayer::refresh_from_raw() {
  const auto& rw = raw_w_.values();
  const auto& rb = raw_b_.values();
  for (size_t i = 0; i < w_.size(); ++i) w_[i] = std::exp(rw[i]);
  b_[0] = rb[0];
  for (size_t i = 1; i < b_.size(); ++i) b_[i] = b_[i - 1] + std::exp(rb[i]);
}

std::vector<double> StanhLayer::reconstruction_levels() const {
  std::vector<double> levels(levels_);
  double acc = 0.0;
  for (double wi : w_) acc += wi;
  levels[0] = -0.5 * acc;
  for (int i = 1; i < levels_; ++i) levels[i] = levels[i - 1] + w_[i - 1];
  return levels;
}

QuantizerGrid StanhLayer::grid() const {
  QuantizerGrid g;
  g.levels = reconstruction_levels();
  g.left_bound.assign(levels_, 0.0);
  g.right_bound.assign(levels_, 0.0);
  g.left_bound[0] = kInf;
  g.right_bound[levels_ - 1] = kInf;
  for (int i = 1; i < levels_; ++i) g.left_bound[i] = g.levels[i] - b_[i - 1];
  for (int i = 0; i < levels_ - 1; ++i) g.right_bound[i] = b_[i] - g.levels[i];
  return g;
}

int StanhLayer::hard_index(double y) const {
  // First boundary strictly greater than y. An element exactly on b_i is not
  // greater-than, so it counts b_i as passed: the upper-level tie-break.
  auto it = std::upper_bound(b_.begin(), b_.end(), y);
  return static_cast<int>(it - b_.begin());
}

double StanhLayer::hard_value(double y) const {
  return reconstruction_levels()[hard_index(y)];
}

bool StanhLayer::levels_inside_intervals() const {
  const auto levels = reconstruction_levels();
  for (int i = 0; i < levels_; ++i) {
    if (i > 0 && !(levels[i] > b_[i - 1])) return false;
    if (i < levels_ - 1 && !(levels[i] < b_[i])) return false;
  }
  return true;
}

void StanhLayer::serialize(ByteWriter& out) const {
  out.magic("STNH");
  out.u8(kStanhFormatVersion);
  out.u16(static_cast<uint16_t>(levels_));
  for (double v : w_) out.f64(v);
  for (double v : b_) out.f64(v);
}

StanhLayer StanhLayer::deserialize(ByteReader& r) {
  r.expect_magic("STNH");
  uint8_t version = r.u8();
  if (version != kStanhFormatVersion) {
    throw std::runtime_error("STNH record: unsupported version " + std::to_string(version));
  }
  int levels = r.u16();
  if (levels < 2) throw std::runtime_error("STNH record: level count < 2");
  std::vector<double> w(levels - 1), b(levels - 1);
  for (double& v : w) v = r.f64();
  for (double& v : b) v = r.f64();
  return from_parameters(std::move(w), std::move(b));
}

void stanh_gradients(std::span<const double> y, const std::vector<double>& w,
                     const std::vector<double>& b, double beta,
                     std::span<const double> upstream,
                     std::span<double> grad_y, std::span<double> grad_w,
                     std::span<double> grad_b) {
  const size_t n = y.size();
  const size_t terms = w.size();
  for (size_t e = 0; e < n; ++e) {
    const double g = upstream[e];
    double dy = 0.0;
    for (size_t i = 0; i < terms; ++i) {
      const double t = std::tanh(beta * (y[e] - b[i]));
      const double sech2 = 1.0 - t * t;
      const double slope = 0.5 * w[i] * beta * sech2;
      dy += slope;
      if (!grad_w.empty()) grad_w[i] += g * 0.5 * t;
      if (!grad_b.empty()) grad_b[i] += -g * slope;
    }
    if (!grad_y.empty()) grad_y[e] += g * dy;
  }
}

Tensor soft_quantize(const Tensor& y, double beta, const Tensor& w_node,
                     const Tensor& b_node) {
  const auto& w = w_node.values();
  const auto& b = b_node.values();
  const size_t n = y.size();
  std::vector<double> out(n, 0.0);
  for (size_t e = 0; e < n; ++e) {
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
      acc += 0.5 * w[i] * std::tanh(beta * (y.values()[e] - b[i]));
    }
    out[e] = acc;
  }
  return make_node(y.shape(), std::move(out), {y, w_node, b_node},
                   [beta](detail::Node& self) {
                     auto* gy = self.parent_grad(0);
                     auto* gw = self.parent_grad(1);
                     auto* gb = self.parent_grad(2);
                     std::span<double> empty;
                     stanh_gradients(
                         self.parents[0]->values, self.parents[1]->values,
                         self.parents[2]->values, beta, self.grad,
                         gy ? std::span<double>(*gy) : empty,
                         gw ? std::span<double>(*gw) : empty,
                         gb ? std::span<double>(*gb) : empty);
                   });
}

Tensor soft_quantize(const Tensor& y, const StanhLayer& layer, double beta) {
  if (layer.trainable() && NoGradGuard::grad_enabled()) {
    auto [w, b] = layer.graph_parameters();
    return soft_quantize(y, beta, w, b);
  }
  Tensor w = Tensor::from_values({layer.levels() - 1}, layer.step_weights());
  Tensor b = Tensor::from_values({layer.levels() - 1}, layer.boundaries());
  return soft_quantize(y, beta, w, b);
}

HardQuantizeResult hard_quantize(const Tensor& y, const StanhLayer& layer) {
  const auto levels = layer.reconstruction_levels();
  HardQuantizeResult result;
  result.indices.resize(y.size());
  std::vector<double> values(y.size());
  for (size_t e = 0; e < y.size(); ++e) {
    int idx = layer.hard_index(y.values()[e]);
    result.indices[e] = idx;
    values[e] = levels[idx];
  }
  result.values = Tensor::from_values(y.shape(), std::move(values));
  return result;
}

StanhLayer interpolate(const StanhLayer& a, const StanhLayer& b, double rho) {
  if (a.levels() != b.levels()) {
    throw std::invalid_argument("interpolate: level counts differ (" +
                                std::to_string(a.levels()) + " vs " +
                                std::to_string(b.levels()) + ")");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("interpolate: rho must be in [0, 1]");
  }
  std::vector<double> w(a.step_weights().size()), bb(a.boundaries().size());
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = (1.0 - rho) * a.step_weights()[i] + rho * b.step_weights()[i];
    bb[i] = (1.0 - rho) * a.boundaries()[i] + rho * b.boundaries()[i];
  }
  return StanhLayer::from_parameters(std::move(w), std::move(bb));
}

Tensor uniform_step_quantize(const Tensor& y, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("uniform_step_quantize: delta must be > 0");
  std::vector<double> out(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    out[i] = delta * std::round(y.values()[i] / delta);
  }
  return Tensor::from_values(y.shape(), std::move(out));
}

}  // namespace svrc
