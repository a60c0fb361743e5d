// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace svrc {

Tensor finite_difference_gradient(
    const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: h must be > 0");
  NoGradGuard no_grad;
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    Tensor probe = Tensor::from_values(x.shape(), x.values());
    probe.values()[i] = x.values()[i] + h;
    double fp = f(probe);
    probe.values()[i] = x.values()[i] - h;
    double fm = f(probe);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("finite_difference_gradient: non-finite evaluation at coordinate " +
                               std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return Tensor::from_values(x.shape(), std::move(grad));
}

bool gradients_close(std::span<const double> got, std::span<const double> want,
                     double rtol, double atol) {
  if (got.size() != want.size()) return false;
  for (size_t i = 0; i < got.size(); ++i) {
    double tol = atol + rtol * std::abs(want[i]);
    if (!(std::abs(got[i] - want[i]) <= tol)) return false;
  }
  return true;
}

}  // namespace svrc
