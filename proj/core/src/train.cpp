// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "svrc/image.hpp"
#include "svrc/optimizer.hpp"

namespace svrc {

namespace {

double l2_norm(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v * v;
  return std::sqrt(acc);
}

// Shared loop for anchor training and derivation refinement. `layers` are
// the (possibly substitute) quantization layers receiving gradients;
// `params` is whatever the optimizer may touch.
struct LoopSetup {
  AnchorModel* model;
  StanhLayer* main_layer;
  StanhLayer* hyper_layer;
  std::vector<Tensor> params;
  AnnealingState ann_main;
  AnnealingState ann_hyper;
};

struct LoopResult {
  double beta_max_main = 1.0;
  double beta_max_hyper = 1.0;
  double final_k = 0.0;
};

LoopResult run_training_loop(LoopSetup& setup, const PatchSource& data,
                             const TrainConfig& cfg, const StepCallback& callback) {
  AdamOptimizer opt(setup.params, cfg.learning_rate);
  Rng data_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  const double lambda_eff = cfg.lambda * kDistortionScale;

  double beta_main = setup.ann_main.step(0.0);
  double beta_hyper = setup.ann_hyper.step(0.0);

  double best_epoch_loss = std::numeric_limits<double>::infinity();
  double epoch_loss_sum = 0.0;
  int epochs_since_best = 0;
  bool velocity_doubled = false;

  for (int step = 1; step <= cfg.steps; ++step) {
    Tensor loss;
    double gap_main = 0.0, gap_hyper = 0.0;
    Tensor first_y, first_z, first_bits_z, first_bits_y;
    for (int s = 0; s < cfg.batch; ++s) {
      Tensor x = data.random_crop(data_rng, cfg.patch);
      ForwardTrainResult fwd = setup.model->forward_train(
          x, *setup.main_layer, *setup.hyper_layer, beta_main, beta_hyper);
      Tensor sample_loss = rd_loss(x, fwd.x_hat, fwd.bits_z, fwd.bits_y, lambda_eff);
      loss = s == 0 ? sample_loss : add(loss, sample_loss);
      auto [soft_m, hard_m] = quantization_errors(fwd.y, fwd.y_soft, fwd.y_hard);
      auto [soft_h, hard_h] = quantization_errors(fwd.z, fwd.z_soft, fwd.z_hard);
      gap_main += hard_m - soft_m;
      gap_hyper += hard_h - soft_h;
      if (s == 0) {
        first_y = fwd.y;
        first_z = fwd.z;
        first_bits_z = fwd.bits_z;
        first_bits_y = fwd.bits_y;
      }
    }
    if (cfg.batch > 1) loss = mul_scalar(loss, 1.0 / cfg.batch);

    const double loss_value = loss.item();
    if (!std::isfinite(loss_value)) {
      std::ostringstream msg;
      msg << "training diverged at step " << step << ": loss=" << loss_value
          << " |y|=" << l2_norm(first_y) << " |z|=" << l2_norm(first_z)
          << " bits_z=" << first_bits_z.item() << " bits_y=" << first_bits_y.item()
          << " beta_main=" << beta_main << " beta_hyper=" << beta_hyper;
      throw TrainingDiverged(msg.str());
    }

    opt.zero_grad();
    loss.backward();
    opt.step();
    setup.main_layer->refresh_from_raw();
    setup.hyper_layer->refresh_from_raw();

    beta_main = setup.ann_main.step(std::abs(gap_main));
    beta_hyper = setup.ann_hyper.step(std::abs(gap_hyper));

    if (callback) callback(step, loss_value, beta_main, beta_hyper);

    epoch_loss_sum += loss_value;
    if (step % cfg.steps_per_epoch == 0) {
      const double epoch_loss = epoch_loss_sum / cfg.steps_per_epoch;
      epoch_loss_sum = 0.0;
      if (epoch_loss < best_epoch_loss * (1.0 - cfg.plateau_rel_improvement)) {
        best_epoch_loss = epoch_loss;
        epochs_since_best = 0;
      } else if (++epochs_since_best >= cfg.patience) {
        // Plateau: halve the learning rate; the first plateau also doubles
        // the annealing velocity.
        opt.set_learning_rate(opt.learning_rate() * 0.5);
        if (!velocity_doubled) {
          setup.ann_main.double_velocity();
          setup.ann_hyper.double_velocity();
          velocity_doubled = true;
        }
        epochs_since_best = 0;
      }
    }
  }

  LoopResult r;
  r.beta_max_main = setup.ann_main.beta_max();
  r.beta_max_hyper = setup.ann_hyper.beta_max();
  r.final_k = setup.ann_main.velocity();
  return r;
}

}  // namespace

PatchSource::PatchSource(std::vector<Tensor> images) : images_(std::move(images)) {
  if (images_.empty()) throw std::invalid_argument("PatchSource: no images");
  for (const Tensor& t : images_) {
    if (t.shape().size() != 3 || t.dim(0) != 3) {
      throw std::invalid_argument("PatchSource: images must be (3,H,W)");
    }
  }
}

PatchSource PatchSource::from_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::runtime_error("PatchSource: no .ppm files in " + dir.string());
  }
  std::vector<Tensor> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(to_tensor(load_ppm(f)));
  return PatchSource(std::move(images));
}

Tensor PatchSource::random_crop(Rng& rng, int patch) const {
  const Tensor& img = images_[rng.uniform_int(images_.size())];
  const int H = img.dim(1), W = img.dim(2);
  if (H < patch || W < patch) {
    throw std::invalid_argument("PatchSource: image " + shape_str(img.shape()) +
                                " smaller than patch " + std::to_string(patch));
  }
  const int y0 = static_cast<int>(rng.uniform_int(H - patch + 1));
  const int x0 = static_cast<int>(rng.uniform_int(W - patch + 1));
  std::vector<double> v(static_cast<size_t>(3) * patch * patch);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < patch; ++y) {
      const double* src =
          img.values().data() + (static_cast<size_t>(c) * H + y0 + y) * W + x0;
      std::copy(src, src + patch,
                v.data() + (static_cast<size_t>(c) * patch + y) * patch);
    }
  }
  return Tensor::from_values({3, patch, patch}, std::move(v));
}

TrainConfig TrainConfig::anchor_run(const Config& c) {
  TrainConfig t;
  t.lambda = c.lambda;
  t.seed = c.seed;
  t.steps = c.steps;
  t.batch = c.batch;
  t.patch = c.patch;
  t.learning_rate = c.learning_rate;
  t.patience = c.patience;
  t.steps_per_epoch = c.steps_per_epoch;
  t.k_velocity = c.k_velocity;
  return t;
}

TrainConfig TrainConfig::refine_run(const Config& c, double lambda_new) {
  TrainConfig t = anchor_run(c);
  t.lambda = lambda_new;
  t.steps = c.refine_steps;
  t.patience = c.refine_patience;
  return t;
}

AnchorModel train_anchor(const PatchSource& data, const ModelConfig& model_config,
                         const TrainConfig& cfg, const StepCallback& callback) {
  AnchorModel model(model_config, cfg.seed);
  model.set_transforms_trainable(true);
  model.set_quantizers_trainable(true);

  LoopSetup setup{
      &model,
      &model.main_layer(),
      &model.hyper_layer(),
      {},
      AnnealingState(cfg.seed ^ 0xA5A5A5A5ull, cfg.k_velocity),
      AnnealingState(cfg.seed ^ 0x5A5A5A5Aull, cfg.k_velocity),
  };
  for (auto& [name, tensor] : model.named_parameters()) setup.params.push_back(tensor);

  LoopResult result = run_training_loop(setup, data, cfg, callback);

  model.set_transforms_trainable(false);
  model.set_quantizers_trainable(false);
  model.training_meta().seed = cfg.seed;
  model.training_meta().steps = static_cast<uint32_t>(cfg.steps);
  model.training_meta().k_velocity = result.final_k;
  model.training_meta().beta_max_main = result.beta_max_main;
  model.training_meta().beta_max_hyper = result.beta_max_hyper;
  return model;
}

Derivation refine_derivation(AnchorModel& anchor, double lambda_new,
                             const PatchSource& data, const TrainConfig& cfg,
                             const StepCallback& callback) {
  if (!(lambda_new > 0.0)) {
    throw std::invalid_argument("refine_derivation: lambda must be > 0");
  }
  anchor.set_transforms_trainable(false);
  anchor.set_quantizers_trainable(false);

  Derivation d;
  d.anchor_id = anchor.id();
  d.lambda = lambda_new;
  d.kind = 0;
  d.seed = cfg.seed;
  d.steps = static_cast<uint32_t>(cfg.steps);
  d.main_layer = StanhLayer::from_parameters(anchor.main_layer().step_weights(),
                                             anchor.main_layer().boundaries());
  d.hyper_layer = StanhLayer::from_parameters(anchor.hyper_layer().step_weights(),
                                              anchor.hyper_layer().boundaries());
  d.main_layer.set_trainable(true);
  d.hyper_layer.set_trainable(true);

  TrainConfig run = cfg;
  run.lambda = lambda_new;

  LoopSetup setup{
      &anchor,
      &d.main_layer,
      &d.hyper_layer,
      {d.main_layer.raw_step_weights(), d.main_layer.raw_boundaries(),
       d.hyper_layer.raw_step_weights(), d.hyper_layer.raw_boundaries()},
      AnnealingState::resume(cfg.seed ^ 0xA5A5A5A5ull, cfg.k_velocity,
                             anchor.training_meta().beta_max_main),
      AnnealingState::resume(cfg.seed ^ 0x5A5A5A5Aull, cfg.k_velocity,
                             anchor.training_meta().beta_max_hyper),
  };

  LoopResult result = run_training_loop(setup, data, run, callback);

  d.main_layer.set_trainable(false);
  d.hyper_layer.set_trainable(false);
  d.beta_max_main = result.beta_max_main;
  d.beta_max_hyper = result.beta_max_hyper;
  return d;
}

}  // namespace svrc
