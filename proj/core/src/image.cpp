// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/image.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "svrc/serialize.hpp"

namespace svrc {

namespace {

// Reads the next whitespace-delimited token, skipping '#' comments that run
// to end of line.
std::string next_token(std::span<const uint8_t> bytes, size_t& pos) {
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() &&
         !std::isspace(static_cast<unsigned char>(bytes[pos])) && bytes[pos] != '#') {
    token.push_back(static_cast<char>(bytes[pos++]));
  }
  if (token.empty()) throw std::runtime_error("PPM: truncated header");
  return token;
}

int parse_positive(const std::string& token, const char* what) {
  size_t used = 0;
  int v;
  try {
    v = std::stoi(token, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("PPM: bad ") + what + " '" + token + "'");
  }
  if (used != token.size() || v <= 0) {
    throw std::runtime_error(std::string("PPM: bad ") + what + " '" + token + "'");
  }
  return v;
}

}  // namespace

PpmImage parse_ppm(std::span<const uint8_t> bytes) {
  size_t pos = 0;
  if (next_token(bytes, pos) != "P6") {
    throw std::runtime_error("PPM: wrong magic, expected binary \"P6\"");
  }
  PpmImage img;
  img.width = parse_positive(next_token(bytes, pos), "width");
  img.height = parse_positive(next_token(bytes, pos), "height");
  const int maxval = parse_positive(next_token(bytes, pos), "maxval");
  if (maxval != 255) {
    throw std::runtime_error("PPM: maxval must be 255, got " + std::to_string(maxval));
  }
  // Exactly one whitespace byte separates the header from the payload.
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw std::runtime_error("PPM: missing separator after maxval");
  }
  ++pos;
  const size_t need = static_cast<size_t>(3) * img.width * img.height;
  if (bytes.size() - pos < need) {
    throw std::runtime_error("PPM: truncated payload, need " + std::to_string(need) +
                             " bytes, have " + std::to_string(bytes.size() - pos));
  }
  img.samples.assign(bytes.begin() + pos, bytes.begin() + pos + need);
  return img;
}

PpmImage load_ppm(const std::filesystem::path& path) {
  return parse_ppm(read_file(path));
}

std::vector<uint8_t> encode_ppm(const PpmImage& image) {
  if (!image.valid()) throw std::invalid_argument("write_ppm: invalid image");
  std::string header = "P6\n" + std::to_string(image.width) + " " +
                       std::to_string(image.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.samples.begin(), image.samples.end());
  return out;
}

void write_ppm(const PpmImage& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_ppm(image));
}

Tensor to_tensor(const PpmImage& image) {
  if (!image.valid()) throw std::invalid_argument("to_tensor: invalid image");
  const int H = image.height, W = image.width;
  std::vector<double> v(static_cast<size_t>(3) * H * W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) {
        v[(static_cast<size_t>(c) * H + y) * W + x] =
            image.samples[(static_cast<size_t>(y) * W + x) * 3 + c] / 255.0;
      }
    }
  }
  return Tensor::from_values({3, H, W}, std::move(v));
}

PpmImage to_image(const Tensor& rgb01) {
  if (rgb01.shape().size() != 3 || rgb01.dim(0) != 3) {
    throw std::invalid_argument("to_image: expected (3,H,W), got " +
                                shape_str(rgb01.shape()));
  }
  PpmImage img;
  img.height = rgb01.dim(1);
  img.width = rgb01.dim(2);
  img.samples.resize(static_cast<size_t>(3) * img.width * img.height);
  const int H = img.height, W = img.width;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = rgb01.values()[(static_cast<size_t>(c) * H + y) * W + x];
        double scaled = std::round(v * 255.0);
        if (scaled < 0.0) scaled = 0.0;
        if (scaled > 255.0) scaled = 255.0;
        img.samples[(static_cast<size_t>(y) * W + x) * 3 + c] =
            static_cast<uint8_t>(scaled);
      }
    }
  }
  return img;
}

}  // namespace svrc
