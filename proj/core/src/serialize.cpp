// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/serialize.hpp"

#include <unistd.h>

#include <bit>
#include <fstream>
#include <stdexcept>

namespace svrc {

void ByteWriter::u16(uint16_t v) {
  buf_.push_back(static_cast<uint8_t>(v));
  buf_.push_back(static_cast<uint8_t>(v >> 8));
}

void ByteWriter::u32(uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

void ByteWriter::bytes(std::span<const uint8_t> b) {
  buf_.insert(buf_.end(), b.begin(), b.end());
}

void ByteWriter::str(const std::string& s) {
  if (s.size() > 0xFFFF) throw std::invalid_argument("string too long to serialize");
  u16(static_cast<uint16_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::magic(const char tag[4]) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(tag[i]));
}

void ByteReader::need(size_t n) const {
  if (pos_ + n > data_.size()) {
    throw std::runtime_error("truncated input: needed " + std::to_string(n) +
                             " bytes at offset " + std::to_string(pos_));
  }
}

uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

uint16_t ByteReader::u16() {
  need(2);
  uint16_t v = static_cast<uint16_t>(data_[pos_]) |
               static_cast<uint16_t>(data_[pos_ + 1]) << 8;
  pos_ += 2;
  return v;
}

uint32_t ByteReader::u32() {
  need(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

uint64_t ByteReader::u64() {
  need(8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<uint8_t> ByteReader::bytes(size_t n) {
  need(n);
  std::vector<uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
  pos_ += n;
  return out;
}

std::string ByteReader::str() {
  uint16_t n = u16();
  need(n);
  std::string s(data_.begin() + pos_, data_.begin() + pos_ + n);
  pos_ += n;
  return s;
}

void ByteReader::expect_magic(const char tag[4]) {
  need(4);
  for (int i = 0; i < 4; ++i) {
    if (data_[pos_ + i] != static_cast<uint8_t>(tag[i])) {
      throw std::runtime_error(std::string("bad magic, expected \"") +
                               std::string(tag, 4) + "\"");
    }
  }
  pos_ += 4;
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("read error on " + path.string());
  return data;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const uint8_t> data) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(static_cast<unsigned>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) {
      fs::remove(tmp);
      throw std::runtime_error("write error on " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace svrc
