// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "svrc/config.hpp"
#include "svrc/image.hpp"
#include "svrc/serialize.hpp"
#include "svrc/synthetic.hpp"

using namespace svrc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("svrc_io_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<uint8_t> str_bytes(const std::string& s) {
  return std::vector<uint8_t>(s.begin(), s.end());
}

}  // namespace

TEST_CASE("ppm header parsing tolerates comments and whitespace") {
  std::string header = "P6 # magic\n# a comment line\n  2 # width\n3\n255\n";
  std::vector<uint8_t> bytes = str_bytes(header);
  bytes.resize(bytes.size() + 18, 0x7F);
  PpmImage img = parse_ppm(bytes);
  CHECK(img.width == 2);
  CHECK(img.height == 3);
  CHECK(img.samples.size() == 18);
  CHECK(img.samples[0] == 0x7F);
}

TEST_CASE("ppm rejects wrong magic, maxval and truncation") {
  CHECK_THROWS_WITH_AS(parse_ppm(str_bytes("P5\n2 2\n255\n....")),
                       doctest::Contains("P6"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_ppm(str_bytes("P6\n2 2\n65535\n")),
                       doctest::Contains("255"), std::runtime_error);
  std::string header = "P6\n4 4\n255\n";
  std::vector<uint8_t> bytes = str_bytes(header);
  bytes.resize(bytes.size() + 10, 0);  // needs 48
  CHECK_THROWS_WITH_AS(parse_ppm(bytes), doctest::Contains("truncated"),
                       std::runtime_error);
}

TEST_CASE("ppm write/load round trip is byte-identical") {
  TempDir tmp;
  PpmImage img = make_synthetic_image(37, 21, 5);
  const fs::path path = tmp.path / "img.ppm";
  write_ppm(img, path);
  PpmImage back = load_ppm(path);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.samples == img.samples);

  // And through the encoder: bytes are identical too.
  CHECK(encode_ppm(back) == encode_ppm(img));
}

TEST_CASE("tensor conversion scales to [0,1] and rounds back exactly") {
  PpmImage img = make_synthetic_image(16, 8, 9);
  Tensor t = to_tensor(img);
  CHECK(t.shape() == Shape{3, 8, 16});
  for (double v : t.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  PpmImage back = to_image(t);
  CHECK(back.samples == img.samples);
}

TEST_CASE("atomic writes leave no temp files behind") {
  TempDir tmp;
  const fs::path path = tmp.path / "sub" / "file.bin";
  std::vector<uint8_t> payload = {1, 2, 3, 4, 5};
  write_file_atomic(path, payload);
  CHECK(read_file(path) == payload);
  size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(path.parent_path())) {
    ++entries;
  }
  CHECK(entries == 1);  // no .tmp leftovers
}

TEST_CASE("byte reader flags truncation with the offset") {
  ByteWriter w;
  w.u32(7);
  ByteReader r(w.data());
  CHECK(r.u32() == 7);
  CHECK_THROWS_WITH_AS(r.u8(), doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("config defaults follow the documented operating point") {
  Config c;
  CHECK(c.levels_main == 60);
  CHECK(c.levels_hyper == 40);
  CHECK(c.init_range == 30.0);
  CHECK(c.k_velocity == 15.0);
  CHECK(c.learning_rate == 1e-4);
  CHECK(c.patience == 50);
  CHECK(c.refine_patience == 10);
  validate(c);
}

TEST_CASE("config precedence: defaults < file < overrides") {
  TempDir tmp;
  const fs::path file = tmp.path / "svrc.conf";
  {
    std::ofstream out(file);
    out << "# desk-scale run\n";
    out << "lambda = 0.004\n";
    out << "steps = 500   # short\n";
    out << "registry = from_file\n";
  }
  Config c;
  apply_config_file(c, file);
  CHECK(c.lambda == 0.004);
  CHECK(c.steps == 500);
  CHECK(c.registry == "from_file");
  CHECK(c.levels_main == 60);  // untouched default

  // Flag-style override wins over the file.
  apply_setting(c, "lambda", "0.02");
  apply_setting(c, "registry", "from_flag");
  CHECK(c.lambda == 0.02);
  CHECK(c.registry == "from_flag");
}

TEST_CASE("config rejects unknown keys and out-of-range values") {
  Config c;
  CHECK_THROWS_WITH_AS(apply_setting(c, "bogus", "1"), doctest::Contains("bogus"),
                       std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "lambda", "-1"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "lambda", "abc"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "patch", "33"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "levels_main", "1"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "scale_count", "0"), std::invalid_argument);

  TempDir tmp;
  const fs::path file = tmp.path / "bad.conf";
  {
    std::ofstream out(file);
    out << "lambda 0.01\n";  // missing '='
  }
  CHECK_THROWS_WITH_AS(apply_config_file(c, file), doctest::Contains("key = value"),
                       std::runtime_error);
}
