// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#ifndef SVRC_CONFIG_HPP_
#define SVRC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

namespace svrc {

// Toolkit settings with their built-in defaults. Precedence is
// defaults < config file < command-line flags; the CLI applies sources in
// that order through apply_setting().
struct Config {
  double lambda = 0.01;
  int levels_main = 60;
  int levels_hyper = 40;
  double init_range = 30.0;  // initial uniform quantization over [-r, r]
  double k_velocity = 15.0;  // annealing velocity K
  uint64_t seed = 1;
  int steps = 2000;
  int refine_steps = 800;
  int batch = 2;
  int patch = 64;
  double learning_rate = 1e-4;
  int patience = 50;         // epochs without improvement before lr halving
  int refine_patience = 10;  // ditto while refining a derivation
  int steps_per_epoch = 100;
  int channels_main = 32;   // M
  int channels_hyper = 16;  // N
  double scale_min = 0.11;
  double scale_max = 64.0;
  int scale_count = 64;
  double sigma_lower_bound = 0.11;
  std::string registry = "registry";
};

// Applies one "key = value" setting; throws on an unknown key or a value
// that fails its documented range check.
void apply_setting(Config& config, const std::string& key, const std::string& value);

// Line-based "key = value" file with '#' comments and blank lines.
void apply_config_file(Config& config, const std::filesystem::path& path);

// Full-range validation (also re-run after flag overrides).
void validate(const Config& config);

}  // namespace svrc

#endif  // SVRC_CONFIG_HPP_
