// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace svrc {

size_t shape_size(const Shape& s) {
  size_t n = 1;
  for (int d : s) {
    if (d <= 0) throw std::invalid_argument("non-positive extent in shape " + shape_str(s));
    n *= static_cast<size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

namespace {
thread_local int g_no_grad_depth = 0;
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool NoGradGuard::grad_enabled() { return g_no_grad_depth == 0; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape_size(shape), 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape_size(shape), value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

double Tensor::item() const {
  if (!is_scalar()) throw std::invalid_argument("item() on non-scalar tensor " + shape_str(shape()));
  return impl_->values[0];
}

Tensor make_node(Shape shape, std::vector<double> values,
                 std::vector<Tensor> parents,
                 std::function<void(detail::Node&)> backward_fn) {
  Tensor out = Tensor::from_values(std::move(shape), std::move(values));
  bool needs = false;
  if (NoGradGuard::grad_enabled()) {
    for (const Tensor& p : parents) {
      if (p.requires_grad()) {
        needs = true;
        break;
      }
    }
  }
  if (needs) {
    out.node()->requires_grad = true;
    out.node()->parents.reserve(parents.size());
    for (const Tensor& p : parents) out.node()->parents.push_back(p.impl());
    out.node()->backward_fn = std::move(backward_fn);
  }
  return out;
}

void Tensor::backward() const {
  if (!defined()) throw std::invalid_argument("backward() on undefined tensor");
  if (!is_scalar()) {
    throw std::invalid_argument("backward() requires a scalar loss, got shape " +
                                shape_str(shape()));
  }
  // Iterative DFS; post-order gives a topological order of the DAG.
  std::vector<detail::Node*> order;
  std::vector<std::pair<detail::Node*, size_t>> stack;
  static int mark_epoch = 0;
  const int mark = ++mark_epoch;
  if (!impl_->requires_grad) return;  // nothing depends on parameters
  stack.push_back({impl_.get(), 0});
  impl_->visit_mark = mark;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && p->visit_mark != mark) {
        p->visit_mark = mark;
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Fresh gradient buffers for every node reached by this pass.
  for (detail::Node* n : order) n->grad.assign(n->values.size(), 0.0);
  impl_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

double std_normal_cdf(double x) {
  // 0.5*erfc(-x/sqrt(2)) is accurate in both tails.
  return 0.5 * std::erfc(-x * 0x1.6a09e667f3bcdp-1);  // 1/sqrt(2)
}

double std_normal_pdf(double x) {
  return 0.3989422804014326779 * std::exp(-0.5 * x * x);  // 1/sqrt(2*pi)
}

}  // namespace svrc
