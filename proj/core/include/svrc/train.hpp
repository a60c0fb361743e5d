// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Anchor training and derivation refinement. An anchor is trained end to
// end; a derivation re-optimizes only the two STanH layers against frozen
// anchor weights for a new lambda. The lambda convention follows the usual
// learned-compression one: the optimized objective weights the [0,1]-scale
// MSE by lambda * 255^2 against bits per pixel.

#ifndef SVRC_TRAIN_HPP_
#define SVRC_TRAIN_HPP_

#include <filesystem>
#include <functional>
#include <stdexcept>

#include "svrc/annealing.hpp"
#include "svrc/config.hpp"
#include "svrc/model.hpp"
#include "svrc/random.hpp"

namespace svrc {

constexpr double kDistortionScale = 255.0 * 255.0;

// In-memory pool of training images, sampled as random square crops.
class PatchSource {
 public:
  explicit PatchSource(std::vector<Tensor> images);
  static PatchSource from_directory(const std::filesystem::path& dir);

  size_t image_count() const { return images_.size(); }
  Tensor random_crop(Rng& rng, int patch) const;

 private:
  std::vector<Tensor> images_;  // each (3,H,W) in [0,1]
};

struct TrainConfig {
  double lambda = 0.01;
  uint64_t seed = 1;
  int steps = 2000;
  int batch = 2;
  int patch = 64;
  double learning_rate = 1e-4;
  int patience = 50;  // epochs
  int steps_per_epoch = 100;
  double k_velocity = 15.0;
  double plateau_rel_improvement = 1e-4;
  bool verbose = false;

  static TrainConfig anchor_run(const Config& config);
  static TrainConfig refine_run(const Config& config, double lambda_new);
};

// Raised when the loss goes non-finite; the message carries the step index
// and the component norms for diagnosis.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-step observer (step, loss, beta_main, beta_hyper); used for progress
// reporting and by tests that watch the loss trend.
using StepCallback = std::function<void(int, double, double, double)>;

AnchorModel train_anchor(const PatchSource& data, const ModelConfig& model_config,
                         const TrainConfig& train_config,
                         const StepCallback& callback = nullptr);

// Clones the anchor's quantization layers and refines only them for
// lambda_new; every non-STanH anchor weight is bitwise unchanged. Annealing
// resumes from the anchor's recorded ceilings rather than restarting at 1.
Derivation refine_derivation(AnchorModel& anchor, double lambda_new,
                             const PatchSource& data, const TrainConfig& train_config,
                             const StepCallback& callback = nullptr);

}  // namespace svrc

#endif  // SVRC_TRAIN_HPP_
