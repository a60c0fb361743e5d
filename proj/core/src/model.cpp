// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/model.hpp"

#include <cmath>
#include <stdexcept>

#include "svrc/random.hpp"
#include "svrc/serialize.hpp"

namespace svrc {

namespace {

constexpr uint8_t kModelFormatVersion = 1;
constexpr uint8_t kDerivationFormatVersion = 1;
constexpr double kLeakySlope = 0.2;

Tensor init_conv_weight(Rng& rng, Shape shape) {
  // fan-in scaled normal; shape is (OC,C,KH,KW) or (C,OC,KH,KW).
  const double fan_in = static_cast<double>(shape[shape.size() == 4 ? 1 : 0]) *
                        shape[2] * shape[3];
  const double std = std::sqrt(1.0 / fan_in);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = std * rng.normal();
  return Tensor::from_values(std::move(shape), std::move(v));
}

ConvLayer make_conv(Rng& rng, int in_ch, int out_ch, int kernel, int stride,
                    bool transposed, double act_slope) {
  ConvLayer layer;
  Shape wshape = transposed ? Shape{in_ch, out_ch, kernel, kernel}
                            : Shape{out_ch, in_ch, kernel, kernel};
  layer.weight = init_conv_weight(rng, std::move(wshape));
  layer.bias = Tensor::zeros({out_ch});
  layer.stride = stride;
  layer.pad = 1;  // k3s1 keeps size, k4s2 halves it exactly
  layer.transposed = transposed;
  layer.act_slope = act_slope;
  return layer;
}

Tensor run_stack(const std::vector<ConvLayer>& stack, Tensor x) {
  for (const ConvLayer& layer : stack) x = layer.forward(x);
  return x;
}

void write_tensor(ByteWriter& out, const std::string& name, const Tensor& t) {
  out.str(name);
  out.u8(static_cast<uint8_t>(t.shape().size()));
  for (int d : t.shape()) out.u32(static_cast<uint32_t>(d));
  for (double v : t.values()) out.f64(v);
}

}  // namespace

ModelConfig ModelConfig::from(const Config& c) {
  ModelConfig m;
  m.channels_main = c.channels_main;
  m.channels_hyper = c.channels_hyper;
  m.levels_main = c.levels_main;
  m.levels_hyper = c.levels_hyper;
  m.init_range = c.init_range;
  m.lambda = c.lambda;
  m.sigma_lower_bound = c.sigma_lower_bound;
  m.scale_min = c.scale_min;
  m.scale_max = c.scale_max;
  m.scale_count = c.scale_count;
  return m;
}

Tensor ConvLayer::forward(const Tensor& x) const {
  Tensor out = transposed ? conv_transpose2d(x, weight, bias, stride, pad)
                          : conv2d(x, weight, bias, stride, pad);
  if (act_slope != kNoActivation) out = leaky_relu(out, act_slope);
  return out;
}

AnchorModel::AnchorModel(const ModelConfig& config, uint64_t seed)
    : config_(config) {
  build_layers(seed);
}

void AnchorModel::build_layers(uint64_t seed) {
  Rng rng(seed);
  const int M = config_.channels_main;
  const int N = config_.channels_hyper;

  fa_.clear();
  fa_.push_back(make_conv(rng, 3, M, 4, 2, false, kLeakySlope));
  fa_.push_back(make_conv(rng, M, M, 4, 2, false, kLeakySlope));
  fa_.push_back(make_conv(rng, M, M, 4, 2, false, kLeakySlope));
  fa_.push_back(make_conv(rng, M, M, 4, 2, false, ConvLayer::kNoActivation));

  fs_.clear();
  fs_.push_back(make_conv(rng, M, M, 4, 2, true, kLeakySlope));
  fs_.push_back(make_conv(rng, M, M, 4, 2, true, kLeakySlope));
  fs_.push_back(make_conv(rng, M, M, 4, 2, true, kLeakySlope));
  fs_.push_back(make_conv(rng, M, 3, 4, 2, true, ConvLayer::kNoActivation));

  ha_.clear();
  ha_.push_back(make_conv(rng, M, N, 3, 1, false, kLeakySlope));
  ha_.push_back(make_conv(rng, N, N, 4, 2, false, ConvLayer::kNoActivation));

  hs_.clear();
  hs_.push_back(make_conv(rng, N, N, 4, 2, true, kLeakySlope));
  hs_.push_back(make_conv(rng, N, 2 * M, 3, 1, false, ConvLayer::kNoActivation));

  factorized_ = FactorizedModel(N);
  stanh_main_ = StanhLayer::init_uniform(config_.levels_main, -config_.init_range,
                                         config_.init_range);
  stanh_hyper_ = StanhLayer::init_uniform(config_.levels_hyper, -config_.init_range,
                                          config_.init_range);
}

Tensor AnchorModel::analysis(const Tensor& x) const { return run_stack(fa_, x); }
Tensor AnchorModel::synthesis(const Tensor& y_hat) const { return run_stack(fs_, y_hat); }
Tensor AnchorModel::hyper_analysis(const Tensor& y) const { return run_stack(ha_, y); }

std::pair<Tensor, Tensor> AnchorModel::hyper_synthesis(const Tensor& z_hat) const {
  Tensor out = run_stack(hs_, z_hat);
  const int M = config_.channels_main;
  Tensor mu = slice_channels(out, 0, M);
  Tensor pre_sigma = slice_channels(out, M, 2 * M);
  Tensor sigma = add_scalar(softplus(pre_sigma), config_.sigma_lower_bound);
  return {mu, sigma};
}

ForwardTrainResult AnchorModel::forward_train(const Tensor& x, double beta_main,
                                              double beta_hyper) const {
  return forward_train(x, stanh_main_, stanh_hyper_, beta_main, beta_hyper);
}

ForwardTrainResult AnchorModel::forward_train(const Tensor& x,
                                              const StanhLayer& main_layer,
                                              const StanhLayer& hyper_layer,
                                              double beta_main,
                                              double beta_hyper) const {
  if (x.shape().size() != 3 || x.dim(0) != 3) {
    throw std::invalid_argument("forward_train: input must be (3,H,W), got " +
                                shape_str(x.shape()));
  }
  const int factor = downsampling_factor();
  if (x.dim(1) % factor != 0 || x.dim(2) % factor != 0) {
    throw std::invalid_argument("forward_train: input " + shape_str(x.shape()) +
                                " not divisible by the stride product " +
                                std::to_string(factor));
  }

  ForwardTrainResult r;
  r.y = analysis(x);
  r.z = hyper_analysis(r.y);

  const bool train_graph = NoGradGuard::grad_enabled() &&
                           (main_layer.trainable() || hyper_layer.trainable());
  if (train_graph) {
    auto [wm, bm] = main_layer.graph_parameters();
    auto [wh, bh] = hyper_layer.graph_parameters();
    r.z_soft = soft_quantize(r.z, beta_hyper, wh, bh);
    r.y_soft = soft_quantize(r.y, beta_main, wm, bm);
    r.bits_z = factorized_rate(r.z_soft, factorized_, wh, bh);
    std::tie(r.mu, r.sigma) = hyper_synthesis(r.z_soft);
    r.bits_y = gaussian_rate(r.y_soft, r.mu, r.sigma, wm, bm);
  } else {
    r.z_soft = soft_quantize(r.z, hyper_layer, beta_hyper);
    r.y_soft = soft_quantize(r.y, main_layer, beta_main);
    r.bits_z = factorized_rate(r.z_soft, factorized_, hyper_layer.grid());
    std::tie(r.mu, r.sigma) = hyper_synthesis(r.z_soft);
    r.bits_y = gaussian_rate(r.y_soft, r.mu, r.sigma, main_layer.grid());
  }
  {
    NoGradGuard no_grad;  // the hard twins only feed the annealing gap
    r.z_hard = hard_quantize(r.z, hyper_layer).values;
    r.y_hard = hard_quantize(r.y, main_layer).values;
  }
  r.x_hat = synthesis(r.y_soft);
  return r;
}

std::vector<double> AnchorModel::scale_table() const {
  return make_scale_table(config_.scale_min, config_.scale_max, config_.scale_count);
}

std::vector<std::pair<std::string, Tensor>> AnchorModel::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> params;
  auto add_stack = [&](const char* prefix, const std::vector<ConvLayer>& stack) {
    for (size_t i = 0; i < stack.size(); ++i) {
      params.emplace_back(std::string(prefix) + std::to_string(i) + ".w", stack[i].weight);
      params.emplace_back(std::string(prefix) + std::to_string(i) + ".b", stack[i].bias);
    }
  };
  add_stack("fa", fa_);
  add_stack("fs", fs_);
  add_stack("ha", ha_);
  add_stack("hs", hs_);
  params.emplace_back("factorized.psi", factorized_.params());
  params.emplace_back("stanh_main.raw_w", stanh_main_.raw_step_weights());
  params.emplace_back("stanh_main.raw_b", stanh_main_.raw_boundaries());
  params.emplace_back("stanh_hyper.raw_w", stanh_hyper_.raw_step_weights());
  params.emplace_back("stanh_hyper.raw_b", stanh_hyper_.raw_boundaries());
  return params;
}

void AnchorModel::set_transforms_trainable(bool trainable) {
  for (auto* stack : {&fa_, &fs_, &ha_, &hs_}) {
    for (ConvLayer& layer : *stack) {
      layer.weight.set_requires_grad(trainable);
      layer.bias.set_requires_grad(trainable);
    }
  }
  factorized_.params().set_requires_grad(trainable);
}

void AnchorModel::set_quantizers_trainable(bool trainable) {
  stanh_main_.set_trainable(trainable);
  stanh_hyper_.set_trainable(trainable);
}

std::vector<uint8_t> AnchorModel::serialize_non_stanh_weights() const {
  ByteWriter out;
  for (const auto& [name, tensor] : named_parameters()) {
    if (name.rfind("stanh_", 0) == 0) continue;
    write_tensor(out, name, tensor);
  }
  return out.take();
}

std::vector<uint8_t> AnchorModel::serialize() const {
  ByteWriter out;
  out.magic("SANC");
  out.u8(kModelFormatVersion);
  out.u16(id_);
  out.f64(config_.lambda);
  out.u32(static_cast<uint32_t>(config_.channels_main));
  out.u32(static_cast<uint32_t>(config_.channels_hyper));
  out.u16(static_cast<uint16_t>(config_.levels_main));
  out.u16(static_cast<uint16_t>(config_.levels_hyper));
  out.f64(config_.init_range);
  out.f64(config_.sigma_lower_bound);
  out.f64(config_.scale_min);
  out.f64(config_.scale_max);
  out.u32(static_cast<uint32_t>(config_.scale_count));
  out.u64(meta_.seed);
  out.u32(meta_.steps);
  out.f64(meta_.k_velocity);
  out.f64(meta_.beta_max_main);
  out.f64(meta_.beta_max_hyper);

  auto params = named_parameters();
  out.u32(static_cast<uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) write_tensor(out, name, tensor);
  return out.take();
}

AnchorModel AnchorModel::deserialize(std::span<const uint8_t> bytes) {
  ByteReader in(bytes);
  in.expect_magic("SANC");
  const uint8_t version = in.u8();
  if (version != kModelFormatVersion) {
    throw std::runtime_error("model file: unsupported version " + std::to_string(version));
  }
  const uint16_t id = in.u16();
  ModelConfig config;
  config.lambda = in.f64();
  config.channels_main = static_cast<int>(in.u32());
  config.channels_hyper = static_cast<int>(in.u32());
  config.levels_main = in.u16();
  config.levels_hyper = in.u16();
  config.init_range = in.f64();
  config.sigma_lower_bound = in.f64();
  config.scale_min = in.f64();
  config.scale_max = in.f64();
  config.scale_count = static_cast<int>(in.u32());

  AnchorModel model(config, /*seed=*/0);
  model.id_ = id;
  model.meta_.seed = in.u64();
  model.meta_.steps = in.u32();
  model.meta_.k_velocity = in.f64();
  model.meta_.beta_max_main = in.f64();
  model.meta_.beta_max_hyper = in.f64();

  auto params = model.named_parameters();
  const uint32_t count = in.u32();
  if (count != params.size()) {
    throw std::runtime_error("model file: expected " + std::to_string(params.size()) +
                             " tensors, found " + std::to_string(count));
  }
  for (auto& [name, tensor] : params) {
    const std::string got = in.str();
    if (got != name) {
      throw std::runtime_error("model file: tensor '" + got + "' where '" + name +
                               "' was expected");
    }
    const uint8_t ndim = in.u8();
    Shape shape(ndim);
    for (uint8_t d = 0; d < ndim; ++d) shape[d] = static_cast<int>(in.u32());
    if (shape != tensor.shape()) {
      throw std::runtime_error("model file: shape mismatch for '" + name + "'");
    }
    for (double& v : tensor.values()) v = in.f64();
  }
  if (in.remaining() != 0) throw std::runtime_error("model file: trailing bytes");
  model.stanh_main_.refresh_from_raw();
  model.stanh_hyper_.refresh_from_raw();
  return model;
}

std::vector<uint8_t> Derivation::serialize() const {
  ByteWriter out;
  out.magic("SDRV");
  out.u8(kDerivationFormatVersion);
  out.u16(anchor_id);
  out.u16(id);
  out.f64(lambda);
  out.u8(kind);
  out.u64(seed);
  out.u32(steps);
  out.f64(beta_max_main);
  out.f64(beta_max_hyper);
  main_layer.serialize(out);
  hyper_layer.serialize(out);
  return out.take();
}

Derivation Derivation::deserialize(std::span<const uint8_t> bytes) {
  ByteReader in(bytes);
  in.expect_magic("SDRV");
  const uint8_t version = in.u8();
  if (version != kDerivationFormatVersion) {
    throw std::runtime_error("derivation file: unsupported version " +
                             std::to_string(version));
  }
  Derivation d;
  d.anchor_id = in.u16();
  d.id = in.u16();
  d.lambda = in.f64();
  d.kind = in.u8();
  d.seed = in.u64();
  d.steps = in.u32();
  d.beta_max_main = in.f64();
  d.beta_max_hyper = in.f64();
  d.main_layer = StanhLayer::deserialize(in);
  d.hyper_layer = StanhLayer::deserialize(in);
  if (in.remaining() != 0) throw std::runtime_error("derivation file: trailing bytes");
  return d;
}

Tensor rd_loss(const Tensor& x, const Tensor& x_hat, const Tensor& rate_z,
               const Tensor& rate_y, double lambda) {
  if (x.shape() != x_hat.shape()) {
    throw std::invalid_argument("rd_loss: x and x_hat shapes differ");
  }
  if (rate_z.item() < 0.0 || rate_y.item() < 0.0) {
    throw std::invalid_argument("rd_loss: negative rate");
  }
  const double pixels = static_cast<double>(x.dim(1)) * x.dim(2);
  Tensor distortion = mean(square(sub(x, x_hat)));
  Tensor bpp = mul_scalar(add(rate_z, rate_y), 1.0 / pixels);
  return add(mul_scalar(distortion, lambda), bpp);
}

}  // namespace svrc
