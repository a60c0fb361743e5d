// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace svrc {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : params_(std::move(params)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {
  if (!(lr_ > 0.0)) throw std::invalid_argument("AdamOptimizer: learning rate must be > 0");
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].size(), 0.0);
    v_[i].assign(params_[i].size(), 0.0);
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    const auto& g = p.grad();
    auto& values = p.values();
    for (size_t j = 0; j < values.size(); ++j) {
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      values[j] -= lr_ * mhat / (std::sqrt(vhat) + epsilon_);
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (Tensor& p : params_) p.grad().clear();
}

}  // namespace svrc
