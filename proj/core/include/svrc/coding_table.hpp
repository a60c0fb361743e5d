// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#ifndef SVRC_CODING_TABLE_HPP_
#define SVRC_CODING_TABLE_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace svrc {

// Integer-normalized PMF over quantizer level indices. Counts sum to
// exactly 2^precision with every symbol kept codable (count >= 1), so the
// range coder sees only integer frequencies.
struct CodingTable {
  int precision = 0;
  std::vector<uint32_t> counts;
  std::vector<uint32_t> cum;  // cum[0] = 0, cum[n] = 2^precision

  size_t symbol_count() const { return counts.size(); }
  uint32_t total() const { return 1u << precision; }
};

// Largest-remainder apportionment with a floor of 1 per symbol; if flooring
// overshoots the budget, the largest counts are decremented (lowest index
// first on ties). Deterministic for identical inputs. Rejects an all-zero
// probability vector; precision must be in [8, 16].
CodingTable build_coding_table(std::span<const double> probabilities, int precision);

// Expected code length in bits per symbol of `table` under the true
// distribution `pmf` (cross-entropy against the table's integer PMF).
double table_cross_entropy(std::span<const double> pmf, const CodingTable& table);

}  // namespace svrc

#endif  // SVRC_CODING_TABLE_HPP_
