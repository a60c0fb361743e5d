// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/range_coder.hpp"

#include <algorithm>
#include <stdexcept>

namespace svrc {

namespace {
constexpr uint32_t kTopValue = 1u << 24;  // renormalize below this
}

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t byte = cache_;
    do {
      out_.push_back(static_cast<uint8_t>(byte + carry));
      byte = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ << 8) & 0xFFFFFFFFu;
}

void RangeEncoder::encode(uint32_t cum_lo, uint32_t freq, int precision) {
  range_ >>= precision;
  low_ += static_cast<uint64_t>(cum_lo) * range_;
  range_ *= freq;
  while (range_ < kTopValue) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_symbol(int32_t symbol, const CodingTable& table) {
  if (symbol < 0 || static_cast<size_t>(symbol) >= table.symbol_count()) {
    throw std::invalid_argument("range coder: symbol " + std::to_string(symbol) +
                                " outside table of " +
                                std::to_string(table.symbol_count()) + " levels");
  }
  encode(table.cum[symbol], table.counts[symbol], table.precision);
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> data) : data_(data) {
  next_byte();  // the encoder's leading cache byte
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ >= data_.size()) {
    throw std::runtime_error("range coder: truncated byte stream at offset " +
                             std::to_string(pos_));
  }
  return data_[pos_++];
}

int32_t RangeDecoder::decode_symbol(const CodingTable& table) {
  range_ >>= table.precision;
  uint32_t slot = code_ / range_;
  if (slot > table.total() - 1) slot = table.total() - 1;
  // Largest symbol with cum <= slot.
  auto it = std::upper_bound(table.cum.begin(), table.cum.end(), slot);
  int32_t symbol = static_cast<int32_t>(it - table.cum.begin()) - 1;
  code_ -= table.cum[symbol] * range_;
  range_ *= table.counts[symbol];
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return symbol;
}

std::vector<uint8_t> range_encode(std::span<const int32_t> symbols,
                                  std::span<const CodingTable* const> tables) {
  if (symbols.size() != tables.size()) {
    throw std::invalid_argument("range_encode: symbol/table count mismatch");
  }
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) enc.encode_symbol(symbols[i], *tables[i]);
  return enc.finish();
}

std::vector<int32_t> range_decode(std::span<const uint8_t> data,
                                  std::span<const CodingTable* const> tables) {
  RangeDecoder dec(data);
  std::vector<int32_t> symbols(tables.size());
  for (size_t i = 0; i < tables.size(); ++i) symbols[i] = dec.decode_symbol(*tables[i]);
  return symbols;
}

}  // namespace svrc
