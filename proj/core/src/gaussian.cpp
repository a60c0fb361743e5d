// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace svrc {

double gaussian_interval_probability(double y, double mu, double sigma,
                                     double r_minus, double r_plus) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_interval_probability: sigma must be > 0");
  }
  const double hi = std::isinf(r_plus) ? 1.0 : std_normal_cdf((y + r_plus - mu) / sigma);
  const double lo = std::isinf(r_minus) ? 0.0 : std_normal_cdf((y - r_minus - mu) / sigma);
  return std::max(hi - lo, kProbabilityFloor);
}

namespace {

std::vector<double> levels_from_w(const std::vector<double>& w) {
  std::vector<double> levels(w.size() + 1);
  double acc = 0.0;
  for (double wi : w) acc += wi;
  levels[0] = -0.5 * acc;
  for (size_t i = 1; i < levels.size(); ++i) levels[i] = levels[i - 1] + w[i - 1];
  return levels;
}

Tensor gaussian_rate_node(const Tensor& y, const Tensor& mu, const Tensor& sigma,
                          std::vector<double> levels, std::vector<double> boundaries,
                          std::vector<Tensor> parents, bool layer_parents) {
  if (y.shape() != mu.shape() || y.shape() != sigma.shape()) {
    throw std::invalid_argument("gaussian_rate: y/mu/sigma shapes differ");
  }
  const int L = static_cast<int>(levels.size());

  auto interval = [&](double v) {
    auto it = std::upper_bound(boundaries.begin(), boundaries.end(), v);
    return static_cast<int>(it - boundaries.begin());
  };

  double total_bits = 0.0;
  for (size_t e = 0; e < y.size(); ++e) {
    const double v = y.values()[e];
    const int k = interval(v);
    const double r_minus = k > 0 ? levels[k] - boundaries[k - 1] : kInf;
    const double r_plus = k < L - 1 ? boundaries[k] - levels[k] : kInf;
    total_bits -= std::log2(gaussian_interval_probability(
        v, mu.values()[e], sigma.values()[e], r_minus, r_plus));
  }

  auto backward = [levels = std::move(levels), boundaries = std::move(boundaries),
                   L, layer_parents](detail::Node& self) {
    const double g = self.grad[0];
    const auto& yv = self.parents[0]->values;
    const auto& mv = self.parents[1]->values;
    const auto& sv = self.parents[2]->values;
    auto* gy = self.parent_grad(0);
    auto* gmu = self.parent_grad(1);
    auto* gsigma = self.parent_grad(2);
    std::vector<double>* gw = layer_parents ? self.parent_grad(3) : nullptr;
    std::vector<double>* gb = layer_parents ? self.parent_grad(4) : nullptr;
    std::vector<double> grad_levels(layer_parents ? L : 0, 0.0);
    const double inv_ln2 = 1.4426950408889634074;

    for (size_t e = 0; e < yv.size(); ++e) {
      const double v = yv[e];
      const double mu = mv[e];
      const double sigma = sv[e];
      auto it = std::upper_bound(boundaries.begin(), boundaries.end(), v);
      const int k = static_cast<int>(it - boundaries.begin());
      const bool has_hi = k < L - 1;
      const bool has_lo = k > 0;
      const double hi_arg = has_hi ? (v + (boundaries[k] - levels[k]) - mu) / sigma : 0.0;
      const double lo_arg = has_lo ? (v - (levels[k] - boundaries[k - 1]) - mu) / sigma : 0.0;
      const double c_hi = has_hi ? std_normal_cdf(hi_arg) : 1.0;
      const double c_lo = has_lo ? std_normal_cdf(lo_arg) : 0.0;
      const double p = c_hi - c_lo;
      if (p <= kProbabilityFloor) continue;
      const double dbits_dp = -g * inv_ln2 / p;
      const double phi_hi = has_hi ? std_normal_pdf(hi_arg) : 0.0;
      const double phi_lo = has_lo ? std_normal_pdf(lo_arg) : 0.0;

      if (gy) (*gy)[e] += dbits_dp * (phi_hi - phi_lo) / sigma;
      if (gmu) (*gmu)[e] += dbits_dp * (phi_lo - phi_hi) / sigma;
      if (gsigma) {
        (*gsigma)[e] += dbits_dp * (phi_lo * lo_arg - phi_hi * hi_arg) / sigma;
      }
      if (layer_parents && (gw || gb)) {
        if (has_hi) {
          const double d_rplus = dbits_dp * phi_hi / sigma;
          if (gb) (*gb)[k] += d_rplus;
          grad_levels[k] -= d_rplus;
        }
        if (has_lo) {
          const double d_rminus = dbits_dp * phi_lo / sigma;
          if (gb) (*gb)[k - 1] -= d_rminus;
          grad_levels[k] += d_rminus;
        }
      }
    }
    if (layer_parents && gw) accumulate_level_grads(grad_levels, *gw);
  };

  return make_node({1}, {total_bits}, std::move(parents), backward);
}

}  // namespace

Tensor gaussian_rate(const Tensor& y_soft, const Tensor& mu, const Tensor& sigma,
                     const QuantizerGrid& grid) {
  std::vector<double> boundaries(grid.level_count() - 1);
  for (int i = 0; i + 1 < grid.level_count(); ++i) {
    boundaries[i] = grid.levels[i] + grid.right_bound[i];
  }
  return gaussian_rate_node(y_soft, mu, sigma, grid.levels, std::move(boundaries),
                            {y_soft, mu, sigma}, false);
}

Tensor gaussian_rate(const Tensor& y_soft, const Tensor& mu, const Tensor& sigma,
                     const Tensor& w_node, const Tensor& b_node) {
  return gaussian_rate_node(y_soft, mu, sigma, levels_from_w(w_node.values()),
                            b_node.values(),
                            {y_soft, mu, sigma, w_node, b_node}, true);
}

std::vector<double> make_scale_table(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 1) {
    throw std::invalid_argument("make_scale_table: need 0 < lo < hi, count >= 1");
  }
  std::vector<double> table(count);
  if (count == 1) {
    table[0] = lo;
    return table;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) table[i] = std::exp(std::log(lo) + step * i);
  return table;
}

int snap_scale_index(double sigma, std::span<const double> scale_table) {
  if (scale_table.empty()) throw std::invalid_argument("snap_scale_index: empty scale table");
  auto it = std::lower_bound(scale_table.begin(), scale_table.end(), sigma);
  if (it == scale_table.begin()) return 0;
  if (it == scale_table.end()) return static_cast<int>(scale_table.size()) - 1;
  const int hi = static_cast<int>(it - scale_table.begin());
  const int lo = hi - 1;
  return (sigma - scale_table[lo] <= scale_table[hi] - sigma) ? lo : hi;
}

std::vector<CodingTable> conditional_tables(const Tensor& mu, const Tensor& sigma,
                                            const QuantizerGrid& grid,
                                            std::span<const double> scale_table,
                                            int precision) {
  if (mu.shape() != sigma.shape()) {
    throw std::invalid_argument("conditional_tables: mu/sigma shapes differ");
  }
  if (scale_table.empty()) {
    throw std::invalid_argument("conditional_tables: empty scale table");
  }
  const int L = grid.level_count();
  std::vector<CodingTable> tables;
  tables.reserve(mu.size());
  std::vector<double> probs(L);
  for (size_t e = 0; e < mu.size(); ++e) {
    const double m = mu.values()[e];
    const double s = scale_table[snap_scale_index(sigma.values()[e], scale_table)];
    for (int k = 0; k < L; ++k) {
      probs[k] = gaussian_interval_probability(grid.levels[k], m, s,
                                               grid.left_bound[k], grid.right_bound[k]);
    }
    tables.push_back(build_coding_table(probs, precision));
  }
  return tables;
}

}  // namespace svrc
