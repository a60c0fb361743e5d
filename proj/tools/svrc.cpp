// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// svrc: variable-rate image codec driver. Subcommands map onto the library
// operations: train-anchor, refine, interpolate, encode, decode, eval-rd,
// bd-rate, intervals, baseline-sweep.
//
// Exit codes: 0 success, 1 operation failure, 2 usage error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "svrc/bitstream.hpp"
#include "svrc/config.hpp"
#include "svrc/eval.hpp"
#include "svrc/image.hpp"
#include "svrc/registry.hpp"
#include "svrc/serialize.hpp"
#include "svrc/train.hpp"

namespace {

using svrc::Config;
using svrc::Registry;

struct FlagOverrides {
  std::optional<std::string> config_file;
  // key -> raw value, applied on top of the config file.
  std::vector<std::pair<std::string, std::string>> settings;
};

// Registers the shared config flags on a subcommand. Values are recorded as
// strings and applied through the same path as config-file entries, so the
// precedence is exactly defaults < file < flags.
void add_config_flags(CLI::App* cmd, FlagOverrides& overrides) {
  cmd->add_option("--config", overrides.config_file, "key = value settings file");
  static const std::vector<std::pair<std::string, std::string>> kFlags = {
      {"--lambda", "lambda"},           {"--levels-main", "levels_main"},
      {"--levels-hyper", "levels_hyper"}, {"--init-range", "init_range"},
      {"--K", "K"},                     {"--seed", "seed"},
      {"--steps", "steps"},             {"--refine-steps", "refine_steps"},
      {"--batch", "batch"},             {"--patch", "patch"},
      {"--learning-rate", "learning_rate"}, {"--patience", "patience"},
      {"--refine-patience", "refine_patience"},
      {"--steps-per-epoch", "steps_per_epoch"},
      {"--M", "M"},                     {"--N", "N"},
      {"--scale-min", "scale_min"},     {"--scale-max", "scale_max"},
      {"--scale-count", "scale_count"}, {"--registry", "registry"},
  };
  for (const auto& [flag, key] : kFlags) {
    cmd->add_option_function<std::string>(
        flag,
        [&overrides, key = key](const std::string& value) {
          overrides.settings.emplace_back(key, value);
        },
        "config key '" + key + "'");
  }
}

Config resolve_config(const FlagOverrides& overrides) {
  Config config;
  if (overrides.config_file) svrc::apply_config_file(config, *overrides.config_file);
  if (const char* env = std::getenv("SVRC_REGISTRY"); env && *env) {
    // Environment default for the registry; explicit flags still win below.
    svrc::apply_setting(config, "registry", env);
  }
  for (const auto& [key, value] : overrides.settings) {
    svrc::apply_setting(config, key, value);
  }
  svrc::validate(config);
  return config;
}

uint16_t want_id(const std::string& name, char prefix, const char* what) {
  auto id = Registry::parse_id(name, prefix);
  if (!id) {
    throw std::runtime_error(std::string("bad ") + what + " name '" + name +
                             "' (expected e.g. " + prefix + "1)");
  }
  return *id;
}

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::runtime_error(std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw std::runtime_error(std::string("empty ") + what + " list");
  return out;
}

std::vector<svrc::Tensor> load_eval_images(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .ppm images in " + dir);
  std::vector<svrc::Tensor> images;
  for (const auto& f : files) images.push_back(svrc::to_tensor(svrc::load_ppm(f)));
  return images;
}

std::vector<svrc::RdPoint> read_rd_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<svrc::RdPoint> points;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {  // header row
      first = false;
      continue;
    }
    std::istringstream ls(line);
    svrc::RdPoint p;
    std::string bpp, psnr;
    if (!std::getline(ls, p.label, ',') || !std::getline(ls, bpp, ',') ||
        !std::getline(ls, psnr)) {
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    }
    p.bpp = std::stod(bpp);
    p.psnr = std::stod(psnr);
    points.push_back(std::move(p));
  }
  return points;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"svrc: STanH variable-rate learned image codec"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  FlagOverrides overrides;

  // train-anchor
  auto* train = app.add_subcommand("train-anchor", "train a full codec for one lambda");
  std::string train_data;
  bool verbose = false;
  train->add_option("--data", train_data, "directory of training .ppm images")->required();
  train->add_flag("--verbose", verbose, "print per-epoch progress");
  add_config_flags(train, overrides);
  train->callback([&] {
    Config config = resolve_config(overrides);
    Registry registry(config.registry);
    svrc::PatchSource data = svrc::PatchSource::from_directory(train_data);
    svrc::TrainConfig tc = svrc::TrainConfig::anchor_run(config);
    svrc::StepCallback cb = nullptr;
    if (verbose) {
      cb = [&](int step, double loss, double bm, double bh) {
        if (step % config.steps_per_epoch == 0) {
          std::cout << "step " << step << " loss " << loss << " beta(" << bm << ","
                    << bh << ")\n";
        }
      };
    }
    svrc::AnchorModel model =
        svrc::train_anchor(data, svrc::ModelConfig::from(config), tc, cb);
    model.set_id(registry.next_anchor_id());
    registry.save_anchor(model);
    std::cout << "trained anchor " << Registry::anchor_name(model.id()) << " (lambda "
              << config.lambda << ") -> " << registry.anchor_path(model.id()).string()
              << "\n";
  });

  // refine
  auto* refine = app.add_subcommand("refine", "refine a quantizer-only derivation");
  std::string refine_anchor, refine_data;
  refine->add_option("--anchor", refine_anchor, "anchor name, e.g. A1")->required();
  refine->add_option("--data", refine_data, "directory of training .ppm images")->required();
  add_config_flags(refine, overrides);
  refine->callback([&] {
    Config config = resolve_config(overrides);
    Registry registry(config.registry);
    const uint16_t anchor_id = want_id(refine_anchor, 'A', "anchor");
    svrc::AnchorModel anchor = registry.load_anchor(anchor_id);
    svrc::PatchSource data = svrc::PatchSource::from_directory(refine_data);
    svrc::TrainConfig tc = svrc::TrainConfig::refine_run(config, config.lambda);
    svrc::Derivation d = svrc::refine_derivation(anchor, config.lambda, data, tc);
    d.id = registry.next_derivation_id(anchor_id);
    registry.save_derivation(d);
    std::cout << "refined derivation " << Registry::derivation_name(d.id)
              << " of " << Registry::anchor_name(anchor_id) << " (lambda "
              << config.lambda << ") -> "
              << registry.derivation_path(anchor_id, d.id).string() << "\n";
  });

  // interpolate
  auto* interp = app.add_subcommand("interpolate",
                                    "materialize a convex combination of two derivations");
  std::string interp_anchor, interp_from, interp_to;
  double interp_rho = 0.5;
  interp->add_option("--anchor", interp_anchor, "anchor name")->required();
  interp->add_option("--from", interp_from, "first derivation, e.g. D1")->required();
  interp->add_option("--to", interp_to, "second derivation")->required();
  interp->add_option("--rho", interp_rho, "mix factor in [0,1]")->required();
  add_config_flags(interp, overrides);
  interp->callback([&] {
    Config config = resolve_config(overrides);
    Registry registry(config.registry);
    const uint16_t anchor_id = want_id(interp_anchor, 'A', "anchor");
    svrc::Derivation a =
        registry.load_derivation(anchor_id, want_id(interp_from, 'D', "derivation"));
    svrc::Derivation b =
        registry.load_derivation(anchor_id, want_id(interp_to, 'D', "derivation"));
    // Quantize rho exactly as a bitstream header would carry it, so the
    // materialized overlay and mode-2 decoding agree bitwise.
    const double rho = svrc::BitstreamHeader::quantize_rho(interp_rho) / 65535.0;
    svrc::Derivation d;
    d.anchor_id = anchor_id;
    d.id = registry.next_derivation_id(anchor_id);
    d.lambda = (1.0 - rho) * a.lambda + rho * b.lambda;
    d.kind = 1;
    d.main_layer = svrc::interpolate(a.main_layer, b.main_layer, rho);
    d.hyper_layer = svrc::interpolate(a.hyper_layer, b.hyper_layer, rho);
    registry.save_derivation(d);
    std::cout << "interpolated " << Registry::derivation_name(d.id) << " = (1-" << rho
              << ")*" << interp_from << " + " << rho << "*" << interp_to << " -> "
              << registry.derivation_path(anchor_id, d.id).string() << "\n";
  });

  // encode
  auto* encode = app.add_subcommand("encode", "compress a PPM image");
  std::string enc_anchor, enc_stanh, enc_ifrom, enc_ito, enc_in, enc_out;
  double enc_rho = -1.0;
  encode->add_option("--anchor", enc_anchor, "anchor name")->required();
  encode->add_option("--stanh", enc_stanh, "derivation overlay to plug in");
  encode->add_option("--interp-from", enc_ifrom, "interpolation endpoint derivation");
  encode->add_option("--interp-to", enc_ito, "interpolation endpoint derivation");
  encode->add_option("--rho", enc_rho, "interpolation mix factor");
  encode->add_option("input", enc_in, "input .ppm")->required();
  encode->add_option("output", enc_out, "output .svrc")->required();
  add_config_flags(encode, overrides);
  encode->callback([&] {
    Config config = resolve_config(overrides);
    Registry registry(config.registry);
    const uint16_t anchor_id = want_id(enc_anchor, 'A', "anchor");
    svrc::AnchorModel anchor = registry.load_anchor(anchor_id);

    svrc::BitstreamHeader header;
    header.anchor_id = anchor_id;
    if (!enc_ifrom.empty() || !enc_ito.empty()) {
      if (enc_ifrom.empty() || enc_ito.empty() || enc_rho < 0.0) {
        throw std::runtime_error("interpolated encode needs --interp-from, --interp-to and --rho");
      }
      header.mode = static_cast<uint8_t>(svrc::LayerMode::kInterpolation);
      header.id0 = want_id(enc_ifrom, 'D', "derivation");
      header.id1 = want_id(enc_ito, 'D', "derivation");
      header.rho_fp = svrc::BitstreamHeader::quantize_rho(enc_rho);
    } else if (!enc_stanh.empty()) {
      header.mode = static_cast<uint8_t>(svrc::LayerMode::kDerivation);
      header.id0 = want_id(enc_stanh, 'D', "derivation");
    } else {
      header.mode = static_cast<uint8_t>(svrc::LayerMode::kAnchor);
    }

    auto [main_layer, hyper_layer] = registry.resolve_layers(anchor, header);
    svrc::Tensor x = svrc::to_tensor(svrc::load_ppm(enc_in));
    svrc::EncodeResult result =
        svrc::encode_image(x, anchor, main_layer, hyper_layer, header);
    const auto bytes = result.stream.serialize();
    svrc::write_file_atomic(enc_out, bytes);
    std::cout << enc_out << ": " << bytes.size() << " bytes, "
              << svrc::bits_per_pixel(bytes.size(), x.dim(2), x.dim(1)) << " bpp (estimate "
              << (result.estimated_bits_z + result.estimated_bits_y) /
                     (static_cast<double>(x.dim(1)) * x.dim(2))
              << ")\n";
  });

  // decode
  auto* decode = app.add_subcommand("decode", "decompress a .svrc bitstream");
  std::string dec_in, dec_out;
  decode->add_option("input", dec_in, "input .svrc")->required();
  decode->add_option("output", dec_out, "output .ppm")->required();
  add_config_flags(decode, overrides);
  decode->callback([&] {
    Config config = resolve_config(overrides);
    Registry registry(config.registry);
    svrc::Bitstream stream = svrc::Bitstream::deserialize(svrc::read_file(dec_in));
    svrc::AnchorModel anchor = registry.load_anchor(stream.header.anchor_id);
    auto [main_layer, hyper_layer] = registry.resolve_layers(anchor, stream.header);
    svrc::Tensor x_hat = svrc::decode_image(stream, anchor, main_layer, hyper_layer);
    svrc::write_ppm(svrc::to_image(x_hat), dec_out);
    std::cout << dec_out << ": " << stream.header.width << "x" << stream.header.height
              << "\n";
  });

  // eval-rd
  auto* evalrd = app.add_subcommand("eval-rd", "rate-distortion sweep to rd_points.csv");
  std::string eval_anchors, eval_images_dir, eval_out = ".";
  int rho_points = 0;
  evalrd->add_option("--anchors", eval_anchors, "comma-separated anchors, e.g. A1,A2")
      ->required();
  evalrd->add_option("--images", eval_images_dir, "directory of eval .ppm images")
      ->required();
  evalrd->add_option("--rho-grid", rho_points,
                     "interior interpolation points between consecutive derivations");
  evalrd->add_option("--out", eval_out, "output directory");
  add_config_flags(evalrd, overrides);
  evalrd->callback([&] {
    Config config = resolve_config(overrides);
    Registry registry(config.registry);
    std::vector<uint16_t> anchor_ids;
    std::istringstream in(eval_anchors);
    std::string name;
    while (std::getline(in, name, ',')) anchor_ids.push_back(want_id(name, 'A', "anchor"));
    std::vector<double> rho_grid;
    for (int i = 1; i <= rho_points; ++i) rho_grid.push_back(i / (rho_points + 1.0));
    auto images = load_eval_images(eval_images_dir);
    auto points = svrc::rd_sweep(registry, anchor_ids, rho_grid, images);
    const auto out_path = std::filesystem::path(eval_out) / "rd_points.csv";
    svrc::write_rd_csv(out_path, points);
    std::cout << out_path.string() << ": " << points.size() << " points\n";
  });

  // bd-rate
  auto* bd = app.add_subcommand("bd-rate", "Bjontegaard deltas between two RD curves");
  std::string bd_a, bd_b, bd_out = ".";
  bd->add_option("--curve-a", bd_a, "reference rd_points.csv")->required();
  bd->add_option("--curve-b", bd_b, "test rd_points.csv")->required();
  bd->add_option("--out", bd_out, "output directory");
  bd->callback([&] {
    auto a = read_rd_csv(bd_a);
    auto b = read_rd_csv(bd_b);
    svrc::BdResult r = svrc::bd_metrics(a, b);
    const auto out_path = std::filesystem::path(bd_out) / "bd.csv";
    svrc::write_bd_csv(out_path, bd_a, bd_b, r);
    std::cout << "BD-Rate " << r.bd_rate_percent << " %, BD-PSNR " << r.bd_psnr_db
              << " dB -> " << out_path.string() << "\n";
  });

  // intervals
  auto* intervals = app.add_subcommand("intervals",
                                       "central quantization-interval widths to intervals.csv");
  std::string int_anchor, int_stanh, int_out = ".";
  int center_count = 9;
  intervals->add_option("--anchor", int_anchor, "anchor name")->required();
  intervals->add_option("--stanh", int_stanh, "comma-separated derivations to include");
  intervals->add_option("--center", center_count, "levels nearest zero to report");
  intervals->add_option("--out", int_out, "output directory");
  add_config_flags(intervals, overrides);
  intervals->callback([&] {
    Config config = resolve_config(overrides);
    Registry registry(config.registry);
    const uint16_t anchor_id = want_id(int_anchor, 'A', "anchor");
    svrc::AnchorModel anchor = registry.load_anchor(anchor_id);
    std::vector<std::pair<std::string, svrc::StanhLayer>> layers;
    layers.emplace_back(Registry::anchor_name(anchor_id), anchor.main_layer());
    if (!int_stanh.empty()) {
      std::istringstream in(int_stanh);
      std::string name;
      while (std::getline(in, name, ',')) {
        const uint16_t did = want_id(name, 'D', "derivation");
        layers.emplace_back(Registry::derivation_name(did),
                            registry.load_derivation(anchor_id, did).main_layer);
      }
    }
    svrc::IntervalReport report = svrc::interval_report(layers, center_count);
    const auto out_path = std::filesystem::path(int_out) / "intervals.csv";
    svrc::write_intervals_csv(out_path, report);
    std::cout << out_path.string() << ": " << report.rows.size() << " rows\n";
  });

  // baseline-sweep
  auto* baseline = app.add_subcommand("baseline-sweep",
                                      "uniform-step quantization baseline RD points");
  std::string base_anchor, base_deltas, base_images, base_out = ".";
  baseline->add_option("--anchor", base_anchor, "anchor name")->required();
  baseline->add_option("--deltas", base_deltas, "comma-separated step sizes")->required();
  baseline->add_option("--images", base_images, "directory of eval .ppm images")->required();
  baseline->add_option("--out", base_out, "output directory");
  add_config_flags(baseline, overrides);
  baseline->callback([&] {
    Config config = resolve_config(overrides);
    Registry registry(config.registry);
    svrc::AnchorModel anchor = registry.load_anchor(want_id(base_anchor, 'A', "anchor"));
    auto deltas = parse_double_list(base_deltas, "delta");
    auto images = load_eval_images(base_images);
    auto points = svrc::uniform_baseline_sweep(anchor, deltas, images);
    const auto out_path = std::filesystem::path(base_out) / "rd_points.csv";
    svrc::write_rd_csv(out_path, points);
    std::cout << out_path.string() << ": " << points.size() << " points\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "svrc: error: " << e.what() << "\n";
    return 1;
  }
}
