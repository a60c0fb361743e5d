// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Desk-scale compression model: four stride-2 analysis/synthesis stages for
// the image transforms and a two-stage mean-scale hyperprior, quantized by
// two independent STanH layers. Total downsampling factor is 32 (16 on the
// main path, 2 more on the hyper path).

#ifndef SVRC_MODEL_HPP_
#define SVRC_MODEL_HPP_

#include <string>
#include <utility>
#include <vector>

#include "svrc/config.hpp"
#include "svrc/factorized.hpp"
#include "svrc/gaussian.hpp"
#include "svrc/stanh.hpp"
#include "svrc/tensor.hpp"

namespace svrc {

struct ModelConfig {
  int channels_main = 32;   // M
  int channels_hyper = 16;  // N
  int levels_main = 60;
  int levels_hyper = 40;
  double init_range = 30.0;
  double lambda = 0.01;
  double sigma_lower_bound = 0.11;
  double scale_min = 0.11;
  double scale_max = 64.0;
  int scale_count = 64;

  static ModelConfig from(const Config& config);
};

struct ConvLayer {
  Tensor weight;
  Tensor bias;
  int stride = 1;
  int pad = 1;
  bool transposed = false;
  double act_slope = kNoActivation;  // leaky-rectifier slope; sentinel = linear

  static constexpr double kNoActivation = -1.0;

  Tensor forward(const Tensor& x) const;
};

struct ForwardTrainResult {
  Tensor y, y_soft, y_hard;
  Tensor z, z_soft, z_hard;
  Tensor mu, sigma;
  Tensor x_hat;
  Tensor bits_z, bits_y;  // scalar rate estimates, in the graph
};

struct TrainingMeta {
  uint64_t seed = 0;
  uint32_t steps = 0;
  double k_velocity = 0.0;
  double beta_max_main = 1.0;
  double beta_max_hyper = 1.0;
};

class AnchorModel {
 public:
  AnchorModel() = default;
  AnchorModel(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  uint16_t id() const { return id_; }
  void set_id(uint16_t id) { id_ = id; }
  double lambda() const { return config_.lambda; }
  TrainingMeta& training_meta() { return meta_; }
  const TrainingMeta& training_meta() const { return meta_; }

  Tensor analysis(const Tensor& x) const;                       // f_a
  Tensor synthesis(const Tensor& y_hat) const;                  // f_s
  Tensor hyper_analysis(const Tensor& y) const;                 // h_a
  std::pair<Tensor, Tensor> hyper_synthesis(const Tensor& z_hat) const;  // mu, sigma

  // Full training-time pass: soft quantization at the given inverse
  // temperatures, hard-quantized twins for the annealing gap, and the two
  // rate terms. Input must be (3,H,W) with H and W multiples of the
  // downsampling factor.
  ForwardTrainResult forward_train(const Tensor& x, double beta_main,
                                   double beta_hyper) const;
  // Same pass with substitute quantization layers (used when refining a
  // derivation against frozen anchor weights).
  ForwardTrainResult forward_train(const Tensor& x, const StanhLayer& main_layer,
                                   const StanhLayer& hyper_layer,
                                   double beta_main, double beta_hyper) const;

  StanhLayer& main_layer() { return stanh_main_; }
  const StanhLayer& main_layer() const { return stanh_main_; }
  StanhLayer& hyper_layer() { return stanh_hyper_; }
  const StanhLayer& hyper_layer() const { return stanh_hyper_; }
  FactorizedModel& factorized() { return factorized_; }
  const FactorizedModel& factorized() const { return factorized_; }

  std::vector<double> scale_table() const;

  static int downsampling_factor() { return 32; }

  // Every trainable tensor, STanH raws and factorized parameters included.
  // Handles share storage with the model, so the optimizer mutates in place.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  void set_transforms_trainable(bool trainable);  // convs + factorized
  void set_quantizers_trainable(bool trainable);

  // Serialized bytes of everything except the two STanH layers; the freeze
  // audit hashes this before and after refining a derivation.
  std::vector<uint8_t> serialize_non_stanh_weights() const;

  std::vector<uint8_t> serialize() const;  // "SANC" model file
  static AnchorModel deserialize(std::span<const uint8_t> bytes);

 private:
  void build_layers(uint64_t seed);

  ModelConfig config_;
  uint16_t id_ = 0;
  TrainingMeta meta_;
  std::vector<ConvLayer> fa_, fs_, ha_, hs_;
  FactorizedModel factorized_;
  StanhLayer stanh_main_, stanh_hyper_;
};

// Quantizer-only overlay sharing an anchor's transforms.
struct Derivation {
  uint16_t anchor_id = 0;
  uint16_t id = 0;
  double lambda = 0.0;
  uint8_t kind = 0;  // 0 = refined, 1 = interpolated
  uint64_t seed = 0;
  uint32_t steps = 0;
  double beta_max_main = 1.0;
  double beta_max_hyper = 1.0;
  StanhLayer main_layer, hyper_layer;

  std::vector<uint8_t> serialize() const;  // "SDRV" overlay file
  static Derivation deserialize(std::span<const uint8_t> bytes);
};

// lambda * MSE(x, x_hat) + (rate_z + rate_y) / pixel count. Distortion is
// mean squared error in [0,1] scale; rates are total bits, normalized here
// to bits per pixel.
Tensor rd_loss(const Tensor& x, const Tensor& x_hat, const Tensor& rate_z,
               const Tensor& rate_y, double lambda);

}  // namespace svrc

#endif  // SVRC_MODEL_HPP_
