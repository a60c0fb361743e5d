// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "svrc/random.hpp"

namespace svrc {

PpmImage make_synthetic_image(int width, int height, uint64_t seed) {
  Rng rng(seed);
  const int blobs = 6 + static_cast<int>(rng.uniform_int(6));
  struct Blob {
    double cx, cy, radius, amp[3];
  };
  std::vector<Blob> field(blobs);
  for (Blob& b : field) {
    b.cx = rng.uniform() * width;
    b.cy = rng.uniform() * height;
    b.radius = (0.05 + 0.25 * rng.uniform()) * std::max(width, height);
    for (double& a : b.amp) a = rng.uniform(-0.5, 0.5);
  }
  double base[3], gx[3], gy[3], freq, phase, wave_amp;
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.25, 0.75);
    gx[c] = rng.uniform(-0.4, 0.4) / width;
    gy[c] = rng.uniform(-0.4, 0.4) / height;
  }
  freq = rng.uniform(2.0, 8.0);
  phase = rng.uniform(0.0, 6.28318);
  wave_amp = rng.uniform(0.02, 0.08);

  PpmImage img;
  img.width = width;
  img.height = height;
  img.samples.resize(static_cast<size_t>(3) * width * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double wave =
          wave_amp * std::sin(freq * 6.28318 * (x + 0.6 * y) / width + phase);
      double px[3];
      for (int c = 0; c < 3; ++c) px[c] = base[c] + gx[c] * x + gy[c] * y + wave;
      for (const Blob& b : field) {
        const double dx = x - b.cx, dy = y - b.cy;
        const double fall = std::exp(-(dx * dx + dy * dy) / (2.0 * b.radius * b.radius));
        for (int c = 0; c < 3; ++c) px[c] += b.amp[c] * fall;
      }
      const double noise = rng.uniform(-0.01, 0.01);
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(px[c] + noise, 0.0, 1.0);
        img.samples[(static_cast<size_t>(y) * width + x) * 3 + c] =
            static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return img;
}

}  // namespace svrc
