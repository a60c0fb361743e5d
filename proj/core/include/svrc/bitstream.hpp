// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Compressed-image container and the encode/decode pipelines. Layout, all
// little-endian:
//   "SVRC" | version u8 | anchor_id u16 | mode u8 | id0 u16 | id1 u16 |
//   rho u16 (fixed point, value/65535) | width u32 | height u32 |
//   pad_right u8 | pad_bottom u8 | hyper payload (u32 len + bytes) |
//   main payload (u32 len + bytes)
// mode: 0 = anchor's own layers, 1 = derivation id0, 2 = interpolation
// between derivations id0 and id1 at rho.

#ifndef SVRC_BITSTREAM_HPP_
#define SVRC_BITSTREAM_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "svrc/model.hpp"
#include "svrc/tensor.hpp"

namespace svrc {

enum class LayerMode : uint8_t { kAnchor = 0, kDerivation = 1, kInterpolation = 2 };

struct BitstreamHeader {
  uint8_t version = 1;
  uint16_t anchor_id = 0;
  uint8_t mode = 0;
  uint16_t id0 = 0;
  uint16_t id1 = 0;
  uint16_t rho_fp = 0;
  uint32_t width = 0;
  uint32_t height = 0;
  uint8_t pad_right = 0;
  uint8_t pad_bottom = 0;

  double rho() const { return rho_fp / 65535.0; }
  static uint16_t quantize_rho(double rho);
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<uint8_t> hyper_payload;
  std::vector<uint8_t> main_payload;

  std::vector<uint8_t> serialize() const;
  static Bitstream deserialize(std::span<const uint8_t> bytes);
  size_t total_bytes() const;
};

struct EncodeResult {
  Bitstream stream;
  Tensor reconstruction;    // the encoder's own hard-path decode, cropped
  double estimated_bits_z;  // factorized estimate at the coded values
  double estimated_bits_y;  // Gaussian estimate, full-precision sigma
};

// Mirror-pads on the right/bottom so both extents are multiples of the
// model's downsampling factor.
Tensor reflect_pad(const Tensor& x, int pad_right, int pad_bottom);

// Encodes a (3,H,W) [0,1] image. `header` must carry the layer descriptor
// (anchor_id/mode/ids/rho); geometry fields are filled in here.
EncodeResult encode_image(const Tensor& x, const AnchorModel& anchor,
                          const StanhLayer& main_layer, const StanhLayer& hyper_layer,
                          BitstreamHeader header);

// Reconstructs the image; output is clamped to [0,1] and cropped to the
// original size.
Tensor decode_image(const Bitstream& stream, const AnchorModel& anchor,
                    const StanhLayer& main_layer, const StanhLayer& hyper_layer);

// Rate estimate (bits) for coding x with the given layers, evaluated at the
// hard-quantized values: the measured payload should sit within a few
// percent of this.
std::pair<double, double> estimate_rate(const Tensor& x, const AnchorModel& anchor,
                                        const StanhLayer& main_layer,
                                        const StanhLayer& hyper_layer);

}  // namespace svrc

#endif  // SVRC_BITSTREAM_HPP_
