// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace svrc {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) {
    throw std::invalid_argument("config: bad value '" + value + "' for " + key);
  }
  return v;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("config: " + message);
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_setting(Config& c, const std::string& key, const std::string& value) {
  using Handler = std::function<void(Config&, const std::string&)>;
  static const std::map<std::string, Handler> handlers = {
      {"lambda", [](Config& c, const std::string& v) { c.lambda = parse_number<double>("lambda", v); }},
      {"levels_main", [](Config& c, const std::string& v) { c.levels_main = parse_number<int>("levels_main", v); }},
      {"levels_hyper", [](Config& c, const std::string& v) { c.levels_hyper = parse_number<int>("levels_hyper", v); }},
      {"init_range", [](Config& c, const std::string& v) { c.init_range = parse_number<double>("init_range", v); }},
      {"K", [](Config& c, const std::string& v) { c.k_velocity = parse_number<double>("K", v); }},
      {"seed", [](Config& c, const std::string& v) { c.seed = parse_number<uint64_t>("seed", v); }},
      {"steps", [](Config& c, const std::string& v) { c.steps = parse_number<int>("steps", v); }},
      {"refine_steps", [](Config& c, const std::string& v) { c.refine_steps = parse_number<int>("refine_steps", v); }},
      {"batch", [](Config& c, const std::string& v) { c.batch = parse_number<int>("batch", v); }},
      {"patch", [](Config& c, const std::string& v) { c.patch = parse_number<int>("patch", v); }},
      {"learning_rate", [](Config& c, const std::string& v) { c.learning_rate = parse_number<double>("learning_rate", v); }},
      {"patience", [](Config& c, const std::string& v) { c.patience = parse_number<int>("patience", v); }},
      {"refine_patience", [](Config& c, const std::string& v) { c.refine_patience = parse_number<int>("refine_patience", v); }},
      {"steps_per_epoch", [](Config& c, const std::string& v) { c.steps_per_epoch = parse_number<int>("steps_per_epoch", v); }},
      {"M", [](Config& c, const std::string& v) { c.channels_main = parse_number<int>("M", v); }},
      {"N", [](Config& c, const std::string& v) { c.channels_hyper = parse_number<int>("N", v); }},
      {"scale_min", [](Config& c, const std::string& v) { c.scale_min = parse_number<double>("scale_min", v); }},
      {"scale_max", [](Config& c, const std::string& v) { c.scale_max = parse_number<double>("scale_max", v); }},
      {"scale_count", [](Config& c, const std::string& v) { c.scale_count = parse_number<int>("scale_count", v); }},
      {"sigma_lower_bound", [](Config& c, const std::string& v) { c.sigma_lower_bound = parse_number<double>("sigma_lower_bound", v); }},
      {"registry", [](Config& c, const std::string& v) { c.registry = v; }},
  };
  auto it = handlers.find(key);
  if (it == handlers.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  it->second(c, value);

  // Catch out-of-range values at parse time, per setting.
  validate(c);
}

void apply_config_file(Config& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " of " + path.string() + " is not 'key = value'");
    }
    apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void validate(const Config& c) {
  check(c.lambda > 0.0, "lambda must be > 0");
  check(c.levels_main >= 2 && c.levels_main <= 4096, "levels_main must be in [2, 4096]");
  check(c.levels_hyper >= 2 && c.levels_hyper <= 4096, "levels_hyper must be in [2, 4096]");
  check(c.init_range > 0.0, "init_range must be > 0");
  check(c.k_velocity > 0.0, "K must be > 0");
  check(c.steps >= 1, "steps must be >= 1");
  check(c.refine_steps >= 1, "refine_steps must be >= 1");
  check(c.batch >= 1 && c.batch <= 64, "batch must be in [1, 64]");
  check(c.patch >= 32 && c.patch % 32 == 0, "patch must be a positive multiple of 32");
  check(c.learning_rate > 0.0, "learning_rate must be > 0");
  check(c.patience >= 1, "patience must be >= 1");
  check(c.refine_patience >= 1, "refine_patience must be >= 1");
  check(c.steps_per_epoch >= 1, "steps_per_epoch must be >= 1");
  check(c.channels_main >= 1 && c.channels_main <= 512, "M must be in [1, 512]");
  check(c.channels_hyper >= 1 && c.channels_hyper <= 512, "N must be in [1, 512]");
  check(c.scale_min > 0.0, "scale_min must be > 0");
  check(c.scale_max > c.scale_min, "scale_max must be > scale_min");
  check(c.scale_count >= 1 && c.scale_count <= 256, "scale_count must be in [1, 256]");
  check(c.sigma_lower_bound > 0.0, "sigma_lower_bound must be > 0");
  check(!c.registry.empty(), "registry path must not be empty");
}

}  // namespace svrc
