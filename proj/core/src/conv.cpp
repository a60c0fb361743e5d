// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Direct 2-D convolution and its transpose. Loops are ordered so the inner
// dimension walks contiguous rows of input and output; no im2col, no FFT.

#include <stdexcept>

#include "svrc/tensor.hpp"

namespace svrc {

namespace {

void check_conv_args(const Tensor& x, const Tensor& w, const Tensor& b,
                     int stride, int pad, bool transposed) {
  if (x.shape().size() != 3) throw std::invalid_argument("conv: input must be (C,H,W)");
  if (w.shape().size() != 4) throw std::invalid_argument("conv: weight must be 4-D");
  if (b.shape().size() != 1) throw std::invalid_argument("conv: bias must be 1-D");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv: bad stride/pad");
  const int in_ch_axis = transposed ? 0 : 1;
  if (w.dim(in_ch_axis) != x.dim(0)) {
    throw std::invalid_argument("conv: channel mismatch, input " + shape_str(x.shape()) +
                                " weight " + shape_str(w.shape()));
  }
  const int out_ch = transposed ? w.dim(1) : w.dim(0);
  if (b.dim(0) != out_ch) throw std::invalid_argument("conv: bias size mismatch");
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  check_conv_args(x, w, b, stride, pad, false);
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int OC = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const int OH = (H + 2 * pad - KH) / stride + 1;
  const int OW = (W + 2 * pad - KW) / stride + 1;
  if (OH < 1 || OW < 1) {
    throw std::invalid_argument("conv2d: output would be empty for input " +
                                shape_str(x.shape()));
  }

  std::vector<double> out(static_cast<size_t>(OC) * OH * OW);
  const auto& xv = x.values();
  const auto& wv = w.values();
  const auto& bv = b.values();

  for (int oc = 0; oc < OC; ++oc) {
    double* oplane = out.data() + static_cast<size_t>(oc) * OH * OW;
    for (int i = 0; i < OH * OW; ++i) oplane[i] = bv[oc];
    for (int c = 0; c < C; ++c) {
      const double* xplane = xv.data() + static_cast<size_t>(c) * H * W;
      const double* wk = wv.data() + (static_cast<size_t>(oc) * C + c) * KH * KW;
      for (int ky = 0; ky < KH; ++ky) {
        for (int kx = 0; kx < KW; ++kx) {
          const double wval = wk[ky * KW + kx];
          for (int oy = 0; oy < OH; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= H) continue;
            const double* xrow = xplane + static_cast<size_t>(iy) * W;
            double* orow = oplane + static_cast<size_t>(oy) * OW;
            for (int ox = 0; ox < OW; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= W) continue;
              orow[ox] += wval * xrow[ix];
            }
          }
        }
      }
    }
  }

  auto backward = [C, H, W, OC, OH, OW, KH, KW, stride, pad](detail::Node& self) {
    auto* gx = self.parent_grad(0);
    auto* gw = self.parent_grad(1);
    auto* gb = self.parent_grad(2);
    const auto& xv = self.parents[0]->values;
    const auto& wv = self.parents[1]->values;
    const auto& go = self.grad;
    if (gb) {
      for (int oc = 0; oc < OC; ++oc) {
        const double* gplane = go.data() + static_cast<size_t>(oc) * OH * OW;
        double acc = 0.0;
        for (int i = 0; i < OH * OW; ++i) acc += gplane[i];
        (*gb)[oc] += acc;
      }
    }
    if (!gx && !gw) return;
    for (int oc = 0; oc < OC; ++oc) {
      const double* gplane = go.data() + static_cast<size_t>(oc) * OH * OW;
      for (int c = 0; c < C; ++c) {
        const double* xplane = xv.data() + static_cast<size_t>(c) * H * W;
        double* gxplane = gx ? gx->data() + static_cast<size_t>(c) * H * W : nullptr;
        const size_t wbase = (static_cast<size_t>(oc) * C + c) * KH * KW;
        for (int ky = 0; ky < KH; ++ky) {
          for (int kx = 0; kx < KW; ++kx) {
            const double wval = wv[wbase + ky * KW + kx];
            double wacc = 0.0;
            for (int oy = 0; oy < OH; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= H) continue;
              const double* grow = gplane + static_cast<size_t>(oy) * OW;
              const double* xrow = xplane + static_cast<size_t>(iy) * W;
              double* gxrow = gxplane ? gxplane + static_cast<size_t>(iy) * W : nullptr;
              for (int ox = 0; ox < OW; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= W) continue;
                const double g = grow[ox];
                if (gxrow) gxrow[ix] += wval * g;
                wacc += xrow[ix] * g;
              }
            }
            if (gw) (*gw)[wbase + ky * KW + kx] += wacc;
          }
        }
      }
    }
  };

  return make_node({OC, OH, OW}, std::move(out), {x, w, b}, backward);
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad) {
  check_conv_args(x, w, b, stride, pad, true);
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int OC = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  const int OH = (H - 1) * stride - 2 * pad + KH;
  const int OW = (W - 1) * stride - 2 * pad + KW;
  if (OH < 1 || OW < 1) {
    throw std::invalid_argument("conv_transpose2d: output would be empty for input " +
                                shape_str(x.shape()));
  }

  std::vector<double> out(static_cast<size_t>(OC) * OH * OW);
  const auto& xv = x.values();
  const auto& wv = w.values();
  const auto& bv = b.values();

  for (int oc = 0; oc < OC; ++oc) {
    double* oplane = out.data() + static_cast<size_t>(oc) * OH * OW;
    for (int i = 0; i < OH * OW; ++i) oplane[i] = bv[oc];
    for (int c = 0; c < C; ++c) {
      const double* xplane = xv.data() + static_cast<size_t>(c) * H * W;
      const double* wk = wv.data() + (static_cast<size_t>(c) * OC + oc) * KH * KW;
      for (int ky = 0; ky < KH; ++ky) {
        for (int kx = 0; kx < KW; ++kx) {
          const double wval = wk[ky * KW + kx];
          for (int iy = 0; iy < H; ++iy) {
            const int oy = iy * stride + ky - pad;
            if (oy < 0 || oy >= OH) continue;
            const double* xrow = xplane + static_cast<size_t>(iy) * W;
            double* orow = oplane + static_cast<size_t>(oy) * OW;
            for (int ix = 0; ix < W; ++ix) {
              const int ox = ix * stride + kx - pad;
              if (ox < 0 || ox >= OW) continue;
              orow[ox] += wval * xrow[ix];
            }
          }
        }
      }
    }
  }

  auto backward = [C, H, W, OC, OH, OW, KH, KW, stride, pad](detail::Node& self) {
    auto* gx = self.parent_grad(0);
    auto* gw = self.parent_grad(1);
    auto* gb = self.parent_grad(2);
    const auto& xv = self.parents[0]->values;
    const auto& wv = self.parents[1]->values;
    const auto& go = self.grad;
    if (gb) {
      for (int oc = 0; oc < OC; ++oc) {
        const double* gplane = go.data() + static_cast<size_t>(oc) * OH * OW;
        double acc = 0.0;
        for (int i = 0; i < OH * OW; ++i) acc += gplane[i];
        (*gb)[oc] += acc;
      }
    }
    if (!gx && !gw) return;
    for (int oc = 0; oc < OC; ++oc) {
      const double* gplane = go.data() + static_cast<size_t>(oc) * OH * OW;
      for (int c = 0; c < C; ++c) {
        const double* xplane = xv.data() + static_cast<size_t>(c) * H * W;
        double* gxplane = gx ? gx->data() + static_cast<size_t>(c) * H * W : nullptr;
        const size_t wbase = (static_cast<size_t>(c) * OC + oc) * KH * KW;
        for (int ky = 0; ky < KH; ++ky) {
          for (int kx = 0; kx < KW; ++kx) {
            const double wval = wv[wbase + ky * KW + kx];
            double wacc = 0.0;
            for (int iy = 0; iy < H; ++iy) {
              const int oy = iy * stride + ky - pad;
              if (oy < 0 || oy >= OH) continue;
              const double* grow = gplane + static_cast<size_t>(oy) * OW;
              const double* xrow = xplane + static_cast<size_t>(iy) * W;
              double* gxrow = gxplane ? gxplane + static_cast<size_t>(iy) * W : nullptr;
              for (int ix = 0; ix < W; ++ix) {
                const int ox = ix * stride + kx - pad;
                if (ox < 0 || ox >= OW) continue;
                const double g = grow[ox];
                if (gxrow) gxrow[ix] += wval * g;
                wacc += xrow[ix] * g;
              }
            }
            if (gw) (*gw)[wbase + ky * KW + kx] += wacc;
          }
        }
      }
    }
  };

  return make_node({OC, OH, OW}, std::move(out), {x, w, b}, backward);
}

}  // namespace svrc
