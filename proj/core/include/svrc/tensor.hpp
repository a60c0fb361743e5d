// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Minimal N-dimensional tensor with reverse-mode automatic differentiation.
// Values are double precision throughout; graphs are built eagerly as ops
// execute and freed when the last Tensor handle to a node goes away.

#ifndef SVRC_TENSOR_HPP_
#define SVRC_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace svrc {

using Shape = std::vector<int>;

size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized during backward()
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;  // empty for leaves
  int visit_mark = 0;

  size_t size() const { return values.size(); }

  // Gradient buffer of parent i, or nullptr when that parent does not
  // require a gradient. The buffer is zero-sized until first touched.
  std::vector<double>* parent_grad(size_t i) {
    Node& p = *parents[i];
    if (!p.requires_grad) return nullptr;
    if (p.grad.size() != p.values.size()) p.grad.assign(p.values.size(), 0.0);
    return &p.grad;
  }
};

}  // namespace detail

// While a guard is alive no backward graph is recorded; ops run as plain
// value computations even when inputs require gradients. Used on all
// inference paths (encode/decode/eval).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool grad_enabled();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  size_t size() const { return impl_->values.size(); }
  int dim(size_t i) const { return impl_->shape[i]; }
  bool is_scalar() const { return size() == 1; }

  const std::vector<double>& values() const { return impl_->values; }
  std::vector<double>& values() { return impl_->values; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }
  bool has_grad() const { return impl_->grad.size() == impl_->values.size(); }
  const std::vector<double>& grad() const { return impl_->grad; }
  std::vector<double>& grad() { return impl_->grad; }

  // Reverse-mode pass from this scalar. Populates grad on every
  // requires_grad tensor this value depends on; each reachable node is
  // visited exactly once. Rejects non-scalar losses.
  void backward() const;

  std::shared_ptr<detail::Node> impl() const { return impl_; }
  detail::Node* node() const { return impl_.get(); }

  explicit Tensor(std::shared_ptr<detail::Node> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::Node> impl_;
};

// Builds an op node. Parents and the backward closure are dropped when no
// parent requires a gradient (or a NoGradGuard is active), so inference
// never retains graph memory.
Tensor make_node(Shape shape, std::vector<double> values,
                 std::vector<Tensor> parents,
                 std::function<void(detail::Node&)> backward_fn);

// ---- differentiable primitives ------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);       // same shape or scalar-vs-tensor
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor softplus(const Tensor& a);                   // log(1 + e^x), stable
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor sum(const Tensor& a);                        // -> scalar
Tensor mean(const Tensor& a);                       // -> scalar
Tensor normal_cdf(const Tensor& a);                 // standard normal CDF

// Channel slice of a (C,H,W) tensor: channels [c0, c1).
Tensor slice_channels(const Tensor& a, int c0, int c1);

// 2-D convolution, zero padding. x: (C,H,W); w: (OC,C,KH,KW); b: (OC).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);
// Transposed counterpart. x: (C,H,W); w: (C,OC,KH,KW); b: (OC).
// Output spatial size: (H-1)*stride - 2*pad + KH.
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// Scalar helpers used throughout the math code (plain doubles, not graph ops).
double std_normal_cdf(double x);
double std_normal_pdf(double x);

}  // namespace svrc

#endif  // SVRC_TENSOR_HPP_
