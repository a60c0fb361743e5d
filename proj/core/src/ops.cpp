// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Forward and exact backward rules for the elementwise and reduction
// primitives. Binary ops broadcast scalar-vs-tensor only; anything fancier
// is out of scope for this engine.

#include <cmath>
#include <stdexcept>

#include "svrc/tensor.hpp"

namespace svrc {

namespace {

enum class Bcast { kNone, kLeftScalar, kRightScalar };

Bcast binary_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Bcast::kNone;
  if (a.is_scalar()) return Bcast::kLeftScalar;
  if (b.is_scalar()) return Bcast::kRightScalar;
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

double at(const std::vector<double>& v, size_t i, bool scalar) {
  return scalar ? v[0] : v[i];
}

// Shared structure of add/sub/mul.
template <typename Fwd, typename Bwd>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd,
                 Bwd bwd) {
  Bcast mode = binary_mode(a, b, name);
  const bool as = mode == Bcast::kLeftScalar;
  const bool bs = mode == Bcast::kRightScalar;
  const Tensor& big = as ? b : a;
  size_t n = big.size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = fwd(at(a.values(), i, as), at(b.values(), i, bs));
  return make_node(big.shape(), std::move(out), {a, b},
                   [as, bs, bwd](detail::Node& self) {
                     auto* ga = self.parent_grad(0);
                     auto* gb = self.parent_grad(1);
                     const auto& av = self.parents[0]->values;
                     const auto& bv = self.parents[1]->values;
                     for (size_t i = 0; i < self.size(); ++i) {
                       double g = self.grad[i];
                       auto [da, db] = bwd(at(av, i, as), at(bv, i, bs));
                       if (ga) (*ga)[as ? 0 : i] += da * g;
                       if (gb) (*gb)[bs ? 0 : i] += db * g;
                     }
                   });
}

// Shared structure of the unary elementwise ops. Bwd receives (x, y) and
// returns dy/dx.
template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd) {
  size_t n = a.size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = fwd(a.values()[i]);
  return make_node(a.shape(), std::move(out), {a}, [bwd](detail::Node& self) {
    auto* ga = self.parent_grad(0);
    if (!ga) return;
    const auto& x = self.parents[0]->values;
    for (size_t i = 0; i < self.size(); ++i)
      (*ga)[i] += bwd(x[i], self.values[i]) * self.grad[i];
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "add", [](double x, double y) { return x + y; },
                   [](double, double) { return std::pair{1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "sub", [](double x, double y) { return x - y; },
                   [](double, double) { return std::pair{1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "mul", [](double x, double y) { return x * y; },
                   [](double x, double y) { return std::pair{y, x}; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary_op(a, [c](double x) { return x + c; },
                  [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double c) {
  return unary_op(a, [c](double x) { return x * c; },
                  [c](double, double) { return c; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor tanh(const Tensor& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary_op(a, [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

Tensor softplus(const Tensor& a) {
  return unary_op(a,
                  [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
                  [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  return unary_op(a,
                  [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
                  [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary_op(a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
                  [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Tensor normal_cdf(const Tensor& a) {
  return unary_op(a, [](double x) { return std_normal_cdf(x); },
                  [](double x, double) { return std_normal_pdf(x); });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return make_node({1}, {acc}, {a}, [](detail::Node& self) {
    auto* ga = self.parent_grad(0);
    if (!ga) return;
    double g = self.grad[0];
    for (double& v : *ga) v += g;
  });
}

Tensor mean(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  double inv = 1.0 / static_cast<double>(a.size());
  return make_node({1}, {acc * inv}, {a}, [inv](detail::Node& self) {
    auto* ga = self.parent_grad(0);
    if (!ga) return;
    double g = self.grad[0] * inv;
    for (double& v : *ga) v += g;
  });
}

Tensor slice_channels(const Tensor& a, int c0, int c1) {
  if (a.shape().size() != 3) {
    throw std::invalid_argument("slice_channels expects (C,H,W), got " +
                                shape_str(a.shape()));
  }
  const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
  if (c0 < 0 || c1 > C || c0 >= c1) throw std::invalid_argument("slice_channels: bad range");
  const size_t plane = static_cast<size_t>(H) * W;
  std::vector<double> out(static_cast<size_t>(c1 - c0) * plane);
  std::copy(a.values().begin() + c0 * plane, a.values().begin() + c1 * plane,
            out.begin());
  return make_node({c1 - c0, H, W}, std::move(out), {a},
                   [c0, plane](detail::Node& self) {
                     auto* ga = self.parent_grad(0);
                     if (!ga) return;
                     for (size_t i = 0; i < self.size(); ++i)
                       (*ga)[c0 * plane + i] += self.grad[i];
                   });
}

}  // namespace svrc
