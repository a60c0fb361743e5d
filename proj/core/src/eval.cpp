// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "svrc/bitstream.hpp"
#include "svrc/serialize.hpp"

namespace svrc {

double psnr(const Tensor& x, const Tensor& x_hat) {
  if (x.shape() != x_hat.shape()) {
    throw std::invalid_argument("psnr: shape mismatch " + shape_str(x.shape()) +
                                " vs " + shape_str(x_hat.shape()));
  }
  double mse = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x.values()[i] - x_hat.values()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return kLosslessPsnr;
  return 10.0 * std::log10(1.0 / mse);
}

double bits_per_pixel(size_t total_bytes, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("bits_per_pixel: empty image");
  }
  return 8.0 * static_cast<double>(total_bytes) /
         (static_cast<double>(width) * height);
}

namespace {

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2) throw std::invalid_argument("pchip: need >= 2 points");
    for (size_t i = 0; i + 1 < n; ++i) {
      if (!(x_[i] < x_[i + 1])) {
        throw std::invalid_argument("pchip: abscissae must be strictly increasing");
      }
    }
    std::vector<double> h(n - 1), delta(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    d_[0] = end_slope(h[0], h.size() > 1 ? h[1] : h[0], delta[0],
                      delta.size() > 1 ? delta[1] : delta[0]);
    d_[n - 1] = end_slope(h[n - 2], n > 2 ? h[n - 3] : h[n - 2], delta[n - 2],
                          n > 2 ? delta[n - 3] : delta[n - 2]);
  }

  double operator()(double x) const {
    size_t i = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
    if (i == 0) i = 1;
    if (i >= x_.size()) i = x_.size() - 1;
    --i;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] +
           (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * d_[i + 1];
  }

 private:
  static double end_slope(double h0, double h1, double del0, double del1) {
    double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if (d * del0 <= 0.0) return 0.0;
    if (del0 * del1 < 0.0 && std::abs(d) > 3.0 * std::abs(del0)) return 3.0 * del0;
    return d;
  }

  std::vector<double> x_, y_, d_;
};

struct Axis {
  std::vector<double> x, y;
};

// Sorts by rate and extracts (quality, log10 rate) or (log10 rate, quality).
Axis curve_axis(std::span<const RdPoint> curve, bool quality_on_x) {
  std::vector<RdPoint> pts(curve.begin(), curve.end());
  std::sort(pts.begin(), pts.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  Axis axis;
  for (const RdPoint& p : pts) {
    if (!(p.bpp > 0.0)) throw std::invalid_argument("bd_metrics: bpp must be > 0");
    const double lr = std::log10(p.bpp);
    axis.x.push_back(quality_on_x ? p.psnr : lr);
    axis.y.push_back(quality_on_x ? lr : p.psnr);
  }
  return axis;
}

double average_diff(const Axis& a, const Axis& b) {
  const double lo = std::max(a.x.front(), b.x.front());
  const double hi = std::min(a.x.back(), b.x.back());
  if (!(lo < hi)) {
    throw std::invalid_argument("bd_metrics: curves have no overlapping span");
  }
  Pchip fa(a.x, a.y), fb(b.x, b.y);
  constexpr int kPoints = 1000;
  double acc = 0.0;
  double prev = fb(lo) - fa(lo);
  for (int i = 1; i <= kPoints; ++i) {
    const double x = lo + (hi - lo) * i / kPoints;
    const double cur = fb(x) - fa(x);
    acc += 0.5 * (prev + cur);
    prev = cur;
  }
  return acc / kPoints;  // trapezoid mean over [lo, hi]
}

}  // namespace

BdResult bd_metrics(std::span<const RdPoint> curve_a, std::span<const RdPoint> curve_b) {
  if (curve_a.size() < 4 || curve_b.size() < 4) {
    throw std::invalid_argument("bd_metrics: need at least 4 points per curve");
  }
  BdResult r;
  const double mean_log_rate_diff =
      average_diff(curve_axis(curve_a, true), curve_axis(curve_b, true));
  r.bd_rate_percent = (std::pow(10.0, mean_log_rate_diff) - 1.0) * 100.0;
  r.bd_psnr_db = average_diff(curve_axis(curve_a, false), curve_axis(curve_b, false));
  return r;
}

namespace {

RdPoint evaluate_streams(const std::string& label, const AnchorModel& anchor,
                         const StanhLayer& main_layer, const StanhLayer& hyper_layer,
                         const BitstreamHeader& header,
                         std::span<const Tensor> eval_images) {
  double bpp_sum = 0.0, psnr_sum = 0.0;
  for (const Tensor& x : eval_images) {
    EncodeResult enc = encode_image(x, anchor, main_layer, hyper_layer, header);
    Tensor decoded = decode_image(enc.stream, anchor, main_layer, hyper_layer);
    bpp_sum += bits_per_pixel(enc.stream.serialize().size(), x.dim(2), x.dim(1));
    psnr_sum += psnr(x, decoded);
  }
  RdPoint p;
  p.label = label;
  p.bpp = bpp_sum / eval_images.size();
  p.psnr = psnr_sum / eval_images.size();
  return p;
}

}  // namespace

std::vector<RdPoint> rd_sweep(const Registry& registry,
                              std::span<const uint16_t> anchor_ids,
                              std::span<const double> rho_grid,
                              std::span<const Tensor> eval_images) {
  if (eval_images.empty()) throw std::invalid_argument("rd_sweep: no eval images");
  std::vector<RdPoint> points;
  for (uint16_t anchor_id : anchor_ids) {
    AnchorModel anchor = registry.load_anchor(anchor_id);
    const std::string aname = Registry::anchor_name(anchor_id);

    BitstreamHeader header;
    header.anchor_id = anchor_id;
    header.mode = static_cast<uint8_t>(LayerMode::kAnchor);
    points.push_back(evaluate_streams(aname, anchor, anchor.main_layer(),
                                      anchor.hyper_layer(), header, eval_images));

    std::vector<uint16_t> derivation_ids = registry.list_derivations(anchor_id);
    std::vector<Derivation> derivations;
    for (uint16_t did : derivation_ids) {
      derivations.push_back(registry.load_derivation(anchor_id, did));
      const Derivation& d = derivations.back();
      BitstreamHeader h;
      h.anchor_id = anchor_id;
      h.mode = static_cast<uint8_t>(LayerMode::kDerivation);
      h.id0 = d.id;
      points.push_back(evaluate_streams(aname + "/" + Registry::derivation_name(d.id),
                                        anchor, d.main_layer, d.hyper_layer, h,
                                        eval_images));
    }

    for (size_t i = 0; i + 1 < derivations.size(); ++i) {
      const Derivation& d0 = derivations[i];
      const Derivation& d1 = derivations[i + 1];
      for (double rho : rho_grid) {
        const uint16_t rho_fp = BitstreamHeader::quantize_rho(rho);
        const double rho_q = rho_fp / 65535.0;
        StanhLayer main_layer = interpolate(d0.main_layer, d1.main_layer, rho_q);
        StanhLayer hyper_layer = interpolate(d0.hyper_layer, d1.hyper_layer, rho_q);
        BitstreamHeader h;
        h.anchor_id = anchor_id;
        h.mode = static_cast<uint8_t>(LayerMode::kInterpolation);
        h.id0 = d0.id;
        h.id1 = d1.id;
        h.rho_fp = rho_fp;
        std::ostringstream label;
        label << aname << "/interp(" << Registry::derivation_name(d0.id) << ","
              << Registry::derivation_name(d1.id) << "," << rho_q << ")";
        points.push_back(evaluate_streams(label.str(), anchor, main_layer, hyper_layer,
                                          h, eval_images));
      }
    }
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  return points;
}

IntervalReport interval_report(
    std::span<const std::pair<std::string, StanhLayer>> layers, int center_count) {
  if (layers.empty()) throw std::invalid_argument("interval_report: no layers");
  const int L = layers.front().second.levels();
  for (const auto& [label, layer] : layers) {
    if (layer.levels() != L) {
      throw std::invalid_argument("interval_report: level counts differ");
    }
  }
  if (center_count < 1 || center_count > L) {
    throw std::invalid_argument("interval_report: center_count must be in [1, L]");
  }

  IntervalReport report;
  for (const auto& [label, layer] : layers) {
    const QuantizerGrid grid = layer.grid();
    // Central level: reconstruction value nearest zero.
    int central = 0;
    for (int i = 1; i < L; ++i) {
      if (std::abs(grid.levels[i]) < std::abs(grid.levels[central])) central = i;
    }
    // center_count indices around it, clipped to the valid range.
    int lo = central - (center_count - 1) / 2;
    lo = std::clamp(lo, 0, L - center_count);
    for (int i = lo; i < lo + center_count; ++i) {
      IntervalRow row;
      row.offset = i - central;
      row.value = grid.levels[i];
      row.width = grid.left_bound[i] + grid.right_bound[i];
      row.label = label;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::vector<RdPoint> uniform_baseline_sweep(const AnchorModel& anchor,
                                            std::span<const double> deltas,
                                            std::span<const Tensor> eval_images) {
  if (eval_images.empty()) {
    throw std::invalid_argument("uniform_baseline_sweep: no eval images");
  }
  NoGradGuard no_grad;
  std::vector<RdPoint> points;
  for (double delta : deltas) {
    if (!(delta > 0.0)) {
      throw std::invalid_argument("uniform_baseline_sweep: delta must be > 0");
    }
    double bpp_sum = 0.0, psnr_sum = 0.0;
    for (const Tensor& x : eval_images) {
      const int factor = AnchorModel::downsampling_factor();
      Tensor padded = reflect_pad(x, (factor - x.dim(2) % factor) % factor,
                                  (factor - x.dim(1) % factor) % factor);
      Tensor y = anchor.analysis(padded);
      Tensor z = anchor.hyper_analysis(y);
      Tensor z_hat = uniform_step_quantize(z, delta);
      auto [mu, sigma] = anchor.hyper_synthesis(z_hat);
      Tensor y_hat = uniform_step_quantize(y, delta);

      const double half = delta / 2.0;
      double bits = 0.0;
      for (size_t i = 0; i < y_hat.size(); ++i) {
        bits -= std::log2(gaussian_interval_probability(
            y_hat.values()[i], mu.values()[i], sigma.values()[i], half, half));
      }
      const size_t z_plane = static_cast<size_t>(z.dim(1)) * z.dim(2);
      for (size_t i = 0; i < z_hat.size(); ++i) {
        const int ch = static_cast<int>(i / z_plane);
        const double v = z_hat.values()[i];
        const double p = anchor.factorized().cdf(ch, v + half) -
                         anchor.factorized().cdf(ch, v - half);
        bits -= std::log2(std::max(p, kProbabilityFloor));
      }

      Tensor x_hat = clamp(anchor.synthesis(y_hat), 0.0, 1.0);
      // Crop back to the original extent.
      std::vector<double> cropped(x.size());
      const int H = x.dim(1), W = x.dim(2), HP = padded.dim(1), WP = padded.dim(2);
      for (int c = 0; c < 3; ++c) {
        for (int yy = 0; yy < H; ++yy) {
          const double* src =
              x_hat.values().data() + (static_cast<size_t>(c) * HP + yy) * WP;
          std::copy(src, src + W,
                    cropped.data() + (static_cast<size_t>(c) * H + yy) * W);
        }
      }
      Tensor recon = Tensor::from_values(x.shape(), std::move(cropped));
      bpp_sum += bits / (static_cast<double>(x.dim(1)) * x.dim(2));
      psnr_sum += psnr(x, recon);
    }
    std::ostringstream label;
    label << "uniform(delta=" << delta << ")";
    points.push_back({label.str(), bpp_sum / eval_images.size(),
                      psnr_sum / eval_images.size()});
  }
  return points;
}

namespace {

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span<const uint8_t>(
                              reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

void write_rd_csv(const std::filesystem::path& path, std::span<const RdPoint> points) {
  std::ostringstream os;
  os << "label,bpp,psnr\n";
  for (const RdPoint& p : points) {
    os << p.label << "," << format_double(p.bpp) << "," << format_double(p.psnr) << "\n";
  }
  write_text_atomic(path, os.str());
}

void write_intervals_csv(const std::filesystem::path& path, const IntervalReport& report) {
  std::ostringstream os;
  os << "level,value,width,label\n";
  for (const IntervalRow& row : report.rows) {
    os << row.offset << "," << format_double(row.value) << ","
       << format_double(row.width) << "," << row.label << "\n";
  }
  write_text_atomic(path, os.str());
}

void write_bd_csv(const std::filesystem::path& path, const std::string& label_a,
                  const std::string& label_b, const BdResult& result) {
  std::ostringstream os;
  os << "curve_a,curve_b,bd_rate_percent,bd_psnr_db\n";
  os << label_a << "," << label_b << "," << format_double(result.bd_rate_percent)
     << "," << format_double(result.bd_psnr_db) << "\n";
  write_text_atomic(path, os.str());
}

}  // namespace svrc
