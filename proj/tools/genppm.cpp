// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// svrc-genppm: writes seeded synthetic PPM images, handy for demos and for
// building desk-scale training sets without external data.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "svrc/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"svrc-genppm: generate synthetic PPM test images"};
  int width = 256, height = 256, count = 1;
  uint64_t seed = 1;
  std::string prefix = "image";
  app.add_option("--width", width, "image width")->check(CLI::PositiveNumber);
  app.add_option("--height", height, "image height")->check(CLI::PositiveNumber);
  app.add_option("--count", count, "number of images")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "base RNG seed");
  app.add_option("--prefix", prefix, "output path prefix");
  CLI11_PARSE(app, argc, argv);

  try {
    for (int i = 0; i < count; ++i) {
      const std::string path = prefix + "_" + std::to_string(i) + ".ppm";
      svrc::write_ppm(svrc::make_synthetic_image(width, height, seed + i), path);
      std::cout << path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "svrc-genppm: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
