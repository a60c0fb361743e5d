// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#ifndef SVRC_GRADCHECK_HPP_
#define SVRC_GRADCHECK_HPP_

#include <functional>

#include "svrc/tensor.hpp"

namespace svrc {

// Central-difference gradient estimate of a scalar function, one coordinate
// at a time: (f(x + h*e_i) - f(x - h*e_i)) / (2h). Independent of the
// autodiff engine; this is the oracle the analytic backward rules are
// checked against. Throws if f returns a non-finite value on any probe.
Tensor finite_difference_gradient(
    const std::function<double(const Tensor&)>& f, const Tensor& x, double h);

// True when |got - want| <= atol + rtol*|want| for every coordinate pair.
bool gradients_close(std::span<const double> got, std::span<const double> want,
                     double rtol, double atol);

}  // namespace svrc

#endif  // SVRC_GRADCHECK_HPP_
