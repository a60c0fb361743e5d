// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/factorized.hpp"

#include <cmath>
#include <stdexcept>

namespace svrc {

namespace {

double softplus_d(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double inv_softplus(double y) { return std::log(std::expm1(y)); }

struct StageTrace {
  double x;
  double u1[3], t1[3], a1[3], g1[3];
  double u2[3], t2[3], a2[3], g2[3];
  double u3, c;
};

void run_forward(std::span<const double> p, double x, StageTrace& s) {
  s.x = x;
  for (int j = 0; j < 3; ++j) {
    s.u1[j] = softplus_d(p[j]) * x + p[3 + j];
    s.t1[j] = std::tanh(s.u1[j]);
    s.a1[j] = std::tanh(p[6 + j]);
    s.g1[j] = s.u1[j] + s.a1[j] * s.t1[j];
  }
  for (int k = 0; k < 3; ++k) {
    double acc = p[18 + k];
    for (int j = 0; j < 3; ++j) acc += softplus_d(p[9 + 3 * k + j]) * s.g1[j];
    s.u2[k] = acc;
    s.t2[k] = std::tanh(s.u2[k]);
    s.a2[k] = std::tanh(p[21 + k]);
    s.g2[k] = s.u2[k] + s.a2[k] * s.t2[k];
  }
  double acc = p[27];
  for (int k = 0; k < 3; ++k) acc += softplus_d(p[24 + k]) * s.g2[k];
  s.u3 = acc;
  s.c = sigmoid_d(s.u3);
}

}  // namespace

FactorizedModel::FactorizedModel(int channels) : channels_(channels) {
  if (channels < 1) throw std::invalid_argument("FactorizedModel: need >= 1 channel");
  std::vector<double> p(static_cast<size_t>(channels) * kParamsPerChannel, 0.0);
  const double h1 = inv_softplus(1.0);
  const double h23 = inv_softplus(1.0 / 3.0);
  for (int c = 0; c < channels; ++c) {
    double* row = p.data() + static_cast<size_t>(c) * kParamsPerChannel;
    for (int j = 0; j < 3; ++j) {
      row[j] = h1;
      // Symmetric bias jitter keeps the composite exactly logistic while
      // breaking the hidden-unit symmetry for training.
      row[3 + j] = 0.5 * (j - 1);
      row[18 + j] = 0.5 * (j - 1);
      row[24 + j] = h23;
    }
    for (int j = 0; j < 9; ++j) row[9 + j] = h23;
  }
  params_ = Tensor::from_values({channels, kParamsPerChannel}, std::move(p));
}

double FactorizedModel::cdf(int channel, double x) const {
  StageTrace s;
  run_forward(std::span<const double>(params_.values())
                  .subspan(static_cast<size_t>(channel) * kParamsPerChannel,
                           kParamsPerChannel),
              x, s);
  return s.c;
}

std::pair<double, double> FactorizedModel::cdf_with_slope(int channel, double x) const {
  std::span<const double> p =
      std::span<const double>(params_.values())
          .subspan(static_cast<size_t>(channel) * kParamsPerChannel, kParamsPerChannel);
  StageTrace s;
  run_forward(p, x, s);
  // dc/dx through the three stages; every factor is positive by construction.
  double dg1[3], dg2[3];
  for (int j = 0; j < 3; ++j)
    dg1[j] = (1.0 + s.a1[j] * (1.0 - s.t1[j] * s.t1[j])) * softplus_d(p[j]);
  for (int k = 0; k < 3; ++k) {
    double du2 = 0.0;
    for (int j = 0; j < 3; ++j) du2 += softplus_d(p[9 + 3 * k + j]) * dg1[j];
    dg2[k] = (1.0 + s.a2[k] * (1.0 - s.t2[k] * s.t2[k])) * du2;
  }
  double du3 = 0.0;
  for (int k = 0; k < 3; ++k) du3 += softplus_d(p[24 + k]) * dg2[k];
  return {s.c, s.c * (1.0 - s.c) * du3};
}

double FactorizedModel::cdf_backward(int channel, double x, double upstream,
                                     std::span<double> grad_row,
                                     double* grad_x) const {
  std::span<const double> p =
      std::span<const double>(params_.values())
          .subspan(static_cast<size_t>(channel) * kParamsPerChannel, kParamsPerChannel);
  StageTrace s;
  run_forward(p, x, s);

  const double dc = upstream * s.c * (1.0 - s.c);  // d loss / d u3
  double dg2[3];
  for (int k = 0; k < 3; ++k) {
    const double sp3 = softplus_d(p[24 + k]);
    if (!grad_row.empty()) {
      grad_row[24 + k] += dc * sigmoid_d(p[24 + k]) * s.g2[k];
    }
    dg2[k] = dc * sp3;
  }
  if (!grad_row.empty()) grad_row[27] += dc;

  double dg1[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    const double du2 = dg2[k] * (1.0 + s.a2[k] * (1.0 - s.t2[k] * s.t2[k]));
    if (!grad_row.empty()) {
      grad_row[21 + k] += dg2[k] * (1.0 - s.a2[k] * s.a2[k]) * s.t2[k];
      grad_row[18 + k] += du2;
      for (int j = 0; j < 3; ++j) {
        grad_row[9 + 3 * k + j] += du2 * sigmoid_d(p[9 + 3 * k + j]) * s.g1[j];
      }
    }
    for (int j = 0; j < 3; ++j) dg1[j] += du2 * softplus_d(p[9 + 3 * k + j]);
  }

  for (int j = 0; j < 3; ++j) {
    const double du1 = dg1[j] * (1.0 + s.a1[j] * (1.0 - s.t1[j] * s.t1[j]));
    if (!grad_row.empty()) {
      grad_row[6 + j] += dg1[j] * (1.0 - s.a1[j] * s.a1[j]) * s.t1[j];
      grad_row[3 + j] += du1;
      grad_row[j] += du1 * sigmoid_d(p[j]) * x;
    }
    if (grad_x) *grad_x += du1 * softplus_d(p[j]);
  }
  return s.c;
}

bool FactorizedModel::monotone_ok() const {
  for (int c = 0; c < channels_; ++c) {
    if (cdf(c, -1e6) > 1e-6) return false;
    if (cdf(c, 1e6) < 1.0 - 1e-6) return false;
    double prev = cdf(c, -40.0);
    for (int i = 1; i <= 80; ++i) {
      double cur = cdf(c, -40.0 + i);
      if (cur < prev) return false;
      prev = cur;
    }
  }
  return true;
}

namespace {

struct Bounds {
  int level;
  double lo, hi;  // integration limits; +/-inf on the extreme intervals
};

Bounds interval_for(double v, const std::vector<double>& levels,
                    const std::vector<double>& b) {
  const int L = static_cast<int>(levels.size());
  auto it = std::upper_bound(b.begin(), b.end(), v);
  const int k = static_cast<int>(it - b.begin());
  Bounds out;
  out.level = k;
  out.lo = k > 0 ? v - (levels[k] - b[k - 1]) : -kInf;
  out.hi = k < L - 1 ? v + (b[k] - levels[k]) : kInf;
  return out;
}

std::vector<double> levels_from_w(const std::vector<double>& w) {
  std::vector<double> levels(w.size() + 1);
  double acc = 0.0;
  for (double wi : w) acc += wi;
  levels[0] = -0.5 * acc;
  for (size_t i = 1; i < levels.size(); ++i) levels[i] = levels[i - 1] + w[i - 1];
  return levels;
}

}  // namespace

void accumulate_level_grads(std::span<const double> grad_levels,
                            std::span<double> grad_w) {
  double total = 0.0;
  for (double g : grad_levels) total += g;
  double suffix = 0.0;
  for (size_t j = grad_w.size(); j-- > 0;) {
    suffix += grad_levels[j + 1];
    grad_w[j] += suffix - 0.5 * total;
  }
}

// Core of both factorized_rate overloads. When layer_parents is true the
// last two parents are the (w, b) tensors and receive bound gradients.
static Tensor factorized_rate_node(const Tensor& z, const FactorizedModel& model,
                                   std::vector<double> levels,
                                   std::vector<double> boundaries,
                                   std::vector<Tensor> parents,
                                   bool layer_parents) {
  if (z.shape().size() != 3 || z.dim(0) != model.channels()) {
    throw std::invalid_argument("factorized_rate: channel mismatch, z " +
                                shape_str(z.shape()) + " vs model " +
                                std::to_string(model.channels()) + " channels");
  }
  const size_t plane = z.size() / model.channels();
  const int L = static_cast<int>(levels.size());

  double total_bits = 0.0;
  for (size_t e = 0; e < z.size(); ++e) {
    const int ch = static_cast<int>(e / plane);
    Bounds bd = interval_for(z.values()[e], levels, boundaries);
    const double c_hi = bd.level < L - 1 ? model.cdf(ch, bd.hi) : 1.0;
    const double c_lo = bd.level > 0 ? model.cdf(ch, bd.lo) : 0.0;
    total_bits -= std::log2(std::max(c_hi - c_lo, kProbabilityFloor));
  }

  auto backward = [model, levels = std::move(levels),
                   boundaries = std::move(boundaries), plane, L,
                   layer_parents](detail::Node& self) {
    const double g = self.grad[0];
    const auto& zv = self.parents[0]->values;
    auto* gz = self.parent_grad(0);
    auto* gpsi = self.parent_grad(1);
    std::vector<double>* gw = layer_parents ? self.parent_grad(2) : nullptr;
    std::vector<double>* gb = layer_parents ? self.parent_grad(3) : nullptr;
    std::vector<double> grad_levels(layer_parents ? L : 0, 0.0);
    const double inv_ln2 = 1.4426950408889634074;

    for (size_t e = 0; e < zv.size(); ++e) {
      const int ch = static_cast<int>(e / plane);
      Bounds bd = interval_for(zv[e], levels, boundaries);
      std::span<double> psi_row;
      if (gpsi) {
        psi_row = std::span<double>(*gpsi).subspan(
            static_cast<size_t>(ch) * FactorizedModel::kParamsPerChannel,
            FactorizedModel::kParamsPerChannel);
      }
      double c_hi = 1.0, c_lo = 0.0, s_hi = 0.0, s_lo = 0.0;
      if (bd.level < L - 1) std::tie(c_hi, s_hi) = model.cdf_with_slope(ch, bd.hi);
      if (bd.level > 0) std::tie(c_lo, s_lo) = model.cdf_with_slope(ch, bd.lo);
      const double p = c_hi - c_lo;
      if (p <= kProbabilityFloor) continue;  // clamped region: zero gradient
      const double dbits_dp = -g * inv_ln2 / p;

      if (gz) (*gz)[e] += dbits_dp * (s_hi - s_lo);
      if (!psi_row.empty()) {
        if (bd.level < L - 1) model.cdf_backward(ch, bd.hi, dbits_dp, psi_row, nullptr);
        if (bd.level > 0) model.cdf_backward(ch, bd.lo, -dbits_dp, psi_row, nullptr);
      }
      if (layer_parents && (gw || gb)) {
        const int k = bd.level;
        // p grows with both interval widths: dp/dr+ = s_hi, dp/dr- = s_lo.
        // r+_k = b_k - l_k and r-_k = l_k - b_{k-1} map those onto the
        // boundary and level parameters.
        if (k < L - 1) {
          const double d_rplus = dbits_dp * s_hi;
          if (gb) (*gb)[k] += d_rplus;
          grad_levels[k] -= d_rplus;
        }
        if (k > 0) {
          const double d_rminus = dbits_dp * s_lo;
          if (gb) (*gb)[k - 1] -= d_rminus;
          grad_levels[k] += d_rminus;
        }
      }
    }
    if (layer_parents && gw) accumulate_level_grads(grad_levels, *gw);
  };

  return make_node({1}, {total_bits}, std::move(parents), backward);
}

Tensor factorized_rate(const Tensor& z_soft, const FactorizedModel& model,
                       const QuantizerGrid& grid) {
  std::vector<double> boundaries(grid.level_count() - 1);
  for (int i = 0; i + 1 < grid.level_count(); ++i) {
    boundaries[i] = grid.levels[i] + grid.right_bound[i];
  }
  return factorized_rate_node(z_soft, model, grid.levels, std::move(boundaries),
                              {z_soft, model.params()}, false);
}

Tensor factorized_rate(const Tensor& z_soft, const FactorizedModel& model,
                       const Tensor& w_node, const Tensor& b_node) {
  return factorized_rate_node(z_soft, model, levels_from_w(w_node.values()),
                              b_node.values(),
                              {z_soft, model.params(), w_node, b_node}, true);
}

std::vector<CodingTable> channel_coding_tables(const FactorizedModel& model,
                                               const QuantizerGrid& grid,
                                               int precision) {
  const int L = grid.level_count();
  std::vector<CodingTable> tables;
  tables.reserve(model.channels());
  std::vector<double> probs(L);
  for (int ch = 0; ch < model.channels(); ++ch) {
    for (int k = 0; k < L; ++k) {
      const double c_hi =
          k < L - 1 ? model.cdf(ch, grid.levels[k] + grid.right_bound[k]) : 1.0;
      const double c_lo =
          k > 0 ? model.cdf(ch, grid.levels[k] - grid.left_bound[k]) : 0.0;
      probs[k] = std::max(c_hi - c_lo, 0.0);
    }
    tables.push_back(build_coding_table(probs, precision));
  }
  return tables;
}

}  // namespace svrc
