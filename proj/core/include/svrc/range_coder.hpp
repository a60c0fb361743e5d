// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Byte-oriented renormalizing range coder with a 32-bit range register and
// carry propagation through a cached byte run. Integer arithmetic only, so
// encoder and decoder stay in lockstep on any platform.

#ifndef SVRC_RANGE_CODER_HPP_
#define SVRC_RANGE_CODER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "svrc/coding_table.hpp"

namespace svrc {

class RangeEncoder {
 public:
  // Encodes one symbol occupying [cum_lo, cum_lo + freq) out of 2^precision.
  void encode(uint32_t cum_lo, uint32_t freq, int precision);
  void encode_symbol(int32_t symbol, const CodingTable& table);

  // Flushes the state; at most 5 bytes of tail are appended.
  std::vector<uint8_t> finish();

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> data);

  int32_t decode_symbol(const CodingTable& table);

 private:
  uint8_t next_byte();

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

// Whole-sequence helpers; tables[i] prices symbols[i]. Decoding consumes
// exactly tables.size() symbols and throws on truncated input or a symbol
// outside its table's alphabet.
std::vector<uint8_t> range_encode(std::span<const int32_t> symbols,
                                  std::span<const CodingTable* const> tables);
std::vector<int32_t> range_decode(std::span<const uint8_t> data,
                                  std::span<const CodingTable* const> tables);

}  // namespace svrc

#endif  // SVRC_RANGE_CODER_HPP_
