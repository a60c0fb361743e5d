// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#ifndef SVRC_OPTIMIZER_HPP_
#define SVRC_OPTIMIZER_HPP_

#include <vector>

#include "svrc/tensor.hpp"

namespace svrc {

// Adaptive-moment gradient descent with bias correction. Parameters with no
// gradient from the last backward pass are left untouched.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Tensor> params, double learning_rate,
                         double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);

  void step();
  void zero_grad();

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, epsilon_;
  long t_ = 0;
};

}  // namespace svrc

#endif  // SVRC_OPTIMIZER_HPP_
