// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#ifndef SVRC_SERIALIZE_HPP_
#define SVRC_SERIALIZE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace svrc {

// Little-endian binary writer. All multi-byte fields in every SVRC file
// format go through this class so the on-disk layout is byte-exact across
// platforms.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void f64(double v);
  void bytes(std::span<const uint8_t> b);
  void str(const std::string& s);  // u16 length prefix
  void magic(const char tag[4]);

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

 private:
  std::vector<uint8_t> buf_;
};

// Bounds-checked little-endian reader; throws std::runtime_error on a
// truncated buffer or a magic/version mismatch.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  double f64();
  std::vector<uint8_t> bytes(size_t n);
  std::string str();
  void expect_magic(const char tag[4]);

  size_t offset() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(size_t n) const;
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

std::vector<uint8_t> read_file(const std::filesystem::path& path);

// Writes to "<path>.tmp.<pid>" and renames over the target, so an
// interrupted process never leaves a partially written registry entry.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const uint8_t> data);

}  // namespace svrc

#endif  // SVRC_SERIALIZE_HPP_
