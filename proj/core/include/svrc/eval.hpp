// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#ifndef SVRC_EVAL_HPP_
#define SVRC_EVAL_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "svrc/model.hpp"
#include "svrc/registry.hpp"
#include "svrc/tensor.hpp"

namespace svrc {

// Identical inputs return the 100 dB sentinel.
constexpr double kLosslessPsnr = 100.0;

// 10*log10(1/MSE) over [0,1]-scale images of equal shape.
double psnr(const Tensor& x, const Tensor& x_hat);

// 8 * total_bytes / (width * height), header included.
double bits_per_pixel(size_t total_bytes, int width, int height);

struct RdPoint {
  std::string label;
  double bpp = 0.0;
  double psnr = 0.0;
};

struct BdResult {
  double bd_rate_percent = 0.0;  // negative = curve_b cheaper at equal quality
  double bd_psnr_db = 0.0;       // positive = curve_b better at equal rate
};

// Bjontegaard deltas via piecewise-cubic (Fritsch-Carlson) interpolation in
// (PSNR, log10 rate), integrated over the overlapping span with a
// 1000-point trapezoid. Requires >= 4 points per curve, monotone in rate,
// and overlapping quality ranges.
BdResult bd_metrics(std::span<const RdPoint> curve_a, std::span<const RdPoint> curve_b);

// Evaluates anchors, their derivations, and interpolations between
// consecutive derivations at each rho in `rho_grid`, by real encode/decode
// over the eval images. Points are averaged over the images and returned
// sorted by bpp.
std::vector<RdPoint> rd_sweep(const Registry& registry,
                              std::span<const uint16_t> anchor_ids,
                              std::span<const double> rho_grid,
                              std::span<const Tensor> eval_images);

struct IntervalRow {
  int offset = 0;       // signed level offset from the central level
  double value = 0.0;   // reconstruction level
  double width = 0.0;   // r- + r+ (inf on the extreme levels)
  std::string label;
};

struct IntervalReport {
  std::vector<IntervalRow> rows;
};

// Interval widths of the center_count levels nearest zero for each labeled
// layer. All layers must share the level count.
IntervalReport interval_report(
    std::span<const std::pair<std::string, StanhLayer>> layers, int center_count);

// Replaces both quantizers with a fixed-step uniform quantizer at each
// delta; rate is estimated with r+/- = delta/2, distortion measured through
// the synthesis transform. One point per delta, averaged over the images.
std::vector<RdPoint> uniform_baseline_sweep(const AnchorModel& anchor,
                                            std::span<const double> deltas,
                                            std::span<const Tensor> eval_images);

// CSV writers (UTF-8, header row, '.' decimal separator).
void write_rd_csv(const std::filesystem::path& path, std::span<const RdPoint> points);
void write_intervals_csv(const std::filesystem::path& path, const IntervalReport& report);
void write_bd_csv(const std::filesystem::path& path, const std::string& label_a,
                  const std::string& label_b, const BdResult& result);

}  // namespace svrc

#endif  // SVRC_EVAL_HPP_
