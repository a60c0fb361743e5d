// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/bitstream.hpp"

#include <cmath>
#include <stdexcept>

#include "svrc/range_coder.hpp"
#include "svrc/serialize.hpp"

namespace svrc {

namespace {

constexpr uint8_t kBitstreamVersion = 1;

// Triangle-wave (mirror) index for arbitrary pad amounts.
int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

std::vector<const CodingTable*> per_symbol_tables(const std::vector<CodingTable>& tables,
                                                  size_t symbols, size_t per_table) {
  std::vector<const CodingTable*> ptrs(symbols);
  for (size_t i = 0; i < symbols; ++i) ptrs[i] = &tables[i / per_table];
  return ptrs;
}

Tensor crop_and_clamp(const Tensor& x, uint32_t width, uint32_t height) {
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (static_cast<int>(height) > H || static_cast<int>(width) > W) {
    throw std::runtime_error("decode: padded image smaller than original size");
  }
  std::vector<double> out(static_cast<size_t>(C) * height * width);
  for (int c = 0; c < C; ++c) {
    for (uint32_t y = 0; y < height; ++y) {
      const double* src = x.values().data() + (static_cast<size_t>(c) * H + y) * W;
      double* dst = out.data() + (static_cast<size_t>(c) * height + y) * width;
      for (uint32_t ix = 0; ix < width; ++ix) {
        dst[ix] = std::clamp(src[ix], 0.0, 1.0);
      }
    }
  }
  return Tensor::from_values({C, static_cast<int>(height), static_cast<int>(width)},
                             std::move(out));
}

}  // namespace

uint16_t BitstreamHeader::quantize_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("rho must be in [0, 1]");
  }
  return static_cast<uint16_t>(std::lround(rho * 65535.0));
}

std::vector<uint8_t> Bitstream::serialize() const {
  ByteWriter out;
  out.magic("SVRC");
  out.u8(header.version);
  out.u16(header.anchor_id);
  out.u8(header.mode);
  out.u16(header.id0);
  out.u16(header.id1);
  out.u16(header.rho_fp);
  out.u32(header.width);
  out.u32(header.height);
  out.u8(header.pad_right);
  out.u8(header.pad_bottom);
  out.u32(static_cast<uint32_t>(hyper_payload.size()));
  out.bytes(hyper_payload);
  out.u32(static_cast<uint32_t>(main_payload.size()));
  out.bytes(main_payload);
  return out.take();
}

Bitstream Bitstream::deserialize(std::span<const uint8_t> bytes) {
  ByteReader in(bytes);
  in.expect_magic("SVRC");
  Bitstream s;
  s.header.version = in.u8();
  if (s.header.version != kBitstreamVersion) {
    throw std::runtime_error("bitstream: unsupported version " +
                             std::to_string(s.header.version));
  }
  s.header.anchor_id = in.u16();
  s.header.mode = in.u8();
  if (s.header.mode > 2) {
    throw std::runtime_error("bitstream: unknown mode " + std::to_string(s.header.mode));
  }
  s.header.id0 = in.u16();
  s.header.id1 = in.u16();
  s.header.rho_fp = in.u16();
  s.header.width = in.u32();
  s.header.height = in.u32();
  s.header.pad_right = in.u8();
  s.header.pad_bottom = in.u8();
  s.hyper_payload = in.bytes(in.u32());
  s.main_payload = in.bytes(in.u32());
  if (in.remaining() != 0) throw std::runtime_error("bitstream: trailing bytes");
  return s;
}

size_t Bitstream::total_bytes() const {
  return 24 + 4 + hyper_payload.size() + 4 + main_payload.size();
}

Tensor reflect_pad(const Tensor& x, int pad_right, int pad_bottom) {
  if (pad_right == 0 && pad_bottom == 0) return x;
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int HP = H + pad_bottom, WP = W + pad_right;
  std::vector<double> out(static_cast<size_t>(C) * HP * WP);
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < HP; ++y) {
      const int sy = mirror_index(y, H);
      const double* src = x.values().data() + (static_cast<size_t>(c) * H + sy) * W;
      double* dst = out.data() + (static_cast<size_t>(c) * HP + y) * WP;
      for (int ix = 0; ix < WP; ++ix) dst[ix] = src[mirror_index(ix, W)];
    }
  }
  return Tensor::from_values({C, HP, WP}, std::move(out));
}

EncodeResult encode_image(const Tensor& x, const AnchorModel& anchor,
                          const StanhLayer& main_layer, const StanhLayer& hyper_layer,
                          BitstreamHeader header) {
  if (x.shape().size() != 3 || x.dim(0) != 3) {
    throw std::invalid_argument("encode_image: input must be (3,H,W)");
  }
  if (main_layer.levels() != anchor.config().levels_main ||
      hyper_layer.levels() != anchor.config().levels_hyper) {
    throw std::invalid_argument("encode_image: layer level counts do not match the anchor");
  }
  NoGradGuard no_grad;

  const int factor = AnchorModel::downsampling_factor();
  const int W = x.dim(2), H = x.dim(1);
  const int pad_right = (factor - W % factor) % factor;
  const int pad_bottom = (factor - H % factor) % factor;
  Tensor padded = reflect_pad(x, pad_right, pad_bottom);

  header.version = kBitstreamVersion;
  header.width = static_cast<uint32_t>(W);
  header.height = static_cast<uint32_t>(H);
  header.pad_right = static_cast<uint8_t>(pad_right);
  header.pad_bottom = static_cast<uint8_t>(pad_bottom);

  Tensor y = anchor.analysis(padded);
  Tensor z = anchor.hyper_analysis(y);
  HardQuantizeResult zq = hard_quantize(z, hyper_layer);
  const QuantizerGrid hyper_grid = hyper_layer.grid();

  std::vector<CodingTable> hyper_tables =
      channel_coding_tables(anchor.factorized(), hyper_grid, kCoderPrecision);
  const size_t z_plane = static_cast<size_t>(z.dim(1)) * z.dim(2);
  EncodeResult result;
  result.stream.hyper_payload = range_encode(
      zq.indices, per_symbol_tables(hyper_tables, zq.indices.size(), z_plane));

  // Decoder-side path from the decoded hyperprior.
  auto [mu, sigma] = anchor.hyper_synthesis(zq.values);
  HardQuantizeResult yq = hard_quantize(y, main_layer);
  const QuantizerGrid main_grid = main_layer.grid();
  std::vector<double> scales = anchor.scale_table();
  std::vector<CodingTable> main_tables =
      conditional_tables(mu, sigma, main_grid, scales, kCoderPrecision);
  std::vector<const CodingTable*> main_ptrs(main_tables.size());
  for (size_t i = 0; i < main_tables.size(); ++i) main_ptrs[i] = &main_tables[i];
  result.stream.main_payload = range_encode(yq.indices, main_ptrs);

  result.stream.header = header;
  result.reconstruction =
      crop_and_clamp(anchor.synthesis(yq.values), header.width, header.height);
  result.estimated_bits_z =
      factorized_rate(zq.values, anchor.factorized(), hyper_grid).item();
  result.estimated_bits_y = gaussian_rate(yq.values, mu, sigma, main_grid).item();
  return result;
}

Tensor decode_image(const Bitstream& stream, const AnchorModel& anchor,
                    const StanhLayer& main_layer, const StanhLayer& hyper_layer) {
  if (main_layer.levels() != anchor.config().levels_main ||
      hyper_layer.levels() != anchor.config().levels_hyper) {
    throw std::invalid_argument("decode_image: layer level counts do not match the anchor");
  }
  NoGradGuard no_grad;

  const BitstreamHeader& h = stream.header;
  const int factor = AnchorModel::downsampling_factor();
  const int WP = static_cast<int>(h.width) + h.pad_right;
  const int HP = static_cast<int>(h.height) + h.pad_bottom;
  if (WP % factor != 0 || HP % factor != 0) {
    throw std::runtime_error("decode: padded extents not divisible by " +
                             std::to_string(factor));
  }

  const int M = anchor.config().channels_main;
  const int N = anchor.config().channels_hyper;
  const int yh = HP / 16, yw = WP / 16;
  const int zh = yh / 2, zw = yw / 2;

  const QuantizerGrid hyper_grid = hyper_layer.grid();
  std::vector<CodingTable> hyper_tables =
      channel_coding_tables(anchor.factorized(), hyper_grid, kCoderPrecision);
  const size_t z_symbols = static_cast<size_t>(N) * zh * zw;
  std::vector<int32_t> z_indices = range_decode(
      stream.hyper_payload,
      per_symbol_tables(hyper_tables, z_symbols, static_cast<size_t>(zh) * zw));

  std::vector<double> z_values(z_symbols);
  for (size_t i = 0; i < z_symbols; ++i) z_values[i] = hyper_grid.levels[z_indices[i]];
  Tensor z_hat = Tensor::from_values({N, zh, zw}, std::move(z_values));

  auto [mu, sigma] = anchor.hyper_synthesis(z_hat);
  const QuantizerGrid main_grid = main_layer.grid();
  std::vector<double> scales = anchor.scale_table();
  std::vector<CodingTable> main_tables =
      conditional_tables(mu, sigma, main_grid, scales, kCoderPrecision);
  std::vector<const CodingTable*> main_ptrs(main_tables.size());
  for (size_t i = 0; i < main_tables.size(); ++i) main_ptrs[i] = &main_tables[i];
  std::vector<int32_t> y_indices = range_decode(stream.main_payload, main_ptrs);

  std::vector<double> y_values(y_indices.size());
  for (size_t i = 0; i < y_indices.size(); ++i) y_values[i] = main_grid.levels[y_indices[i]];
  Tensor y_hat = Tensor::from_values({M, yh, yw}, std::move(y_values));

  return crop_and_clamp(anchor.synthesis(y_hat), h.width, h.height);
}

std::pair<double, double> estimate_rate(const Tensor& x, const AnchorModel& anchor,
                                        const StanhLayer& main_layer,
                                        const StanhLayer& hyper_layer) {
  NoGradGuard no_grad;
  const int factor = AnchorModel::downsampling_factor();
  Tensor padded = reflect_pad(x, (factor - x.dim(2) % factor) % factor,
                              (factor - x.dim(1) % factor) % factor);
  Tensor y = anchor.analysis(padded);
  Tensor z = anchor.hyper_analysis(y);
  HardQuantizeResult zq = hard_quantize(z, hyper_layer);
  auto [mu, sigma] = anchor.hyper_synthesis(zq.values);
  HardQuantizeResult yq = hard_quantize(y, main_layer);
  const double bits_z =
      factorized_rate(zq.values, anchor.factorized(), hyper_layer.grid()).item();
  const double bits_y = gaussian_rate(yq.values, mu, sigma, main_layer.grid()).item();
  return {bits_z, bits_y};
}

}  // namespace svrc
