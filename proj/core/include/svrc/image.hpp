// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#ifndef SVRC_IMAGE_HPP_
#define SVRC_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "svrc/tensor.hpp"

namespace svrc {

// 8-bit binary PPM ("P6", maxval 255). Samples are interleaved RGB rows.
struct PpmImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> samples;  // 3 * width * height

  bool valid() const {
    return width > 0 && height > 0 &&
           samples.size() == static_cast<size_t>(3) * width * height;
  }
};

// Whitespace- and comment-tolerant header parse; rejects wrong magic,
// maxval != 255 and truncated payloads.
PpmImage load_ppm(const std::filesystem::path& path);
PpmImage parse_ppm(std::span<const uint8_t> bytes);

void write_ppm(const PpmImage& image, const std::filesystem::path& path);
std::vector<uint8_t> encode_ppm(const PpmImage& image);

// (3,H,W) tensor in [0,1] <-> interleaved 8-bit samples. to_image rounds to
// the nearest 8-bit value and clamps.
Tensor to_tensor(const PpmImage& image);
PpmImage to_image(const Tensor& rgb01);

}  // namespace svrc

#endif  // SVRC_IMAGE_HPP_
