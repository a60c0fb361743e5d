// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/coding_table.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace svrc {

CodingTable build_coding_table(std::span<const double> probabilities, int precision) {
  if (precision < 8 || precision > 16) {
    throw std::invalid_argument("build_coding_table: precision must be in [8, 16]");
  }
  const size_t n = probabilities.size();
  if (n == 0) throw std::invalid_argument("build_coding_table: empty probability vector");
  double total_p = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("build_coding_table: probabilities must be finite and >= 0");
    }
    total_p += p;
  }
  if (total_p <= 0.0) {
    throw std::invalid_argument("build_coding_table: all-zero probability vector");
  }
  const uint32_t budget = 1u << precision;
  if (n > budget) {
    throw std::invalid_argument("build_coding_table: more symbols than 2^precision");
  }

  CodingTable table;
  table.precision = precision;
  table.counts.assign(n, 0);
  std::vector<double> remainder(n);
  uint64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    const double ideal = probabilities[i] / total_p * budget;
    uint32_t c = static_cast<uint32_t>(std::floor(ideal));
    remainder[i] = ideal - c;
    if (c < 1) c = 1;  // keep every symbol codable
    table.counts[i] = c;
    assigned += c;
  }

  if (assigned < budget) {
    // Hand out the deficit by largest remainder, lowest index on ties.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return remainder[a] > remainder[b];
    });
    uint64_t deficit = budget - assigned;
    for (size_t k = 0; deficit > 0; k = (k + 1) % n) {
      ++table.counts[order[k]];
      --deficit;
    }
  } else if (assigned > budget) {
    // Flooring at 1 overshot; shave the largest counts down.
    uint64_t excess = assigned - budget;
    while (excess > 0) {
      size_t largest = 0;
      for (size_t i = 1; i < n; ++i) {
        if (table.counts[i] > table.counts[largest]) largest = i;
      }
      if (table.counts[largest] <= 1) {
        throw std::invalid_argument("build_coding_table: cannot fit floor-1 counts in budget");
      }
      const uint32_t take = std::min<uint64_t>(excess, table.counts[largest] - 1);
      table.counts[largest] -= take;
      excess -= take;
    }
  }

  table.cum.assign(n + 1, 0);
  for (size_t i = 0; i < n; ++i) table.cum[i + 1] = table.cum[i] + table.counts[i];
  return table;
}

double table_cross_entropy(std::span<const double> pmf, const CodingTable& table) {
  if (pmf.size() != table.counts.size()) {
    throw std::invalid_argument("table_cross_entropy: size mismatch");
  }
  const double total = static_cast<double>(table.total());
  double bits = 0.0;
  for (size_t i = 0; i < pmf.size(); ++i) {
    if (pmf[i] <= 0.0) continue;
    bits -= pmf[i] * std::log2(table.counts[i] / total);
  }
  return bits;
}

}  // namespace svrc
