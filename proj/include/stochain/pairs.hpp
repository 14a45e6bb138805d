#pragma once

#include <cstddef>
#include <utility>

#include "stochain/types.hpp"

namespace stochain {

// Row-major packing of unordered pairs {i, j}, i < j, of {0, ..., m-1} into
// a flat array of m(m-1)/2 slots. Everything that keeps per-pair statistics
// (flow sums, gap evidence) shares this layout.

inline std::size_t pair_count(Index m) {
  return static_cast<std::size_t>(m) * static_cast<std::size_t>(m - 1) / 2;
}

inline std::size_t pair_slot(Index i, Index j, Index m) {
  if (i > j) std::swap(i, j);
  const auto si = static_cast<std::size_t>(i);
  const auto sj = static_cast<std::size_t>(j);
  const auto sm = static_cast<std::size_t>(m);
  return si * sm - si * (si + 1) / 2 + (sj - si - 1);
}

// Inverse of pair_slot, occasionally handy when walking all slots.
inline std::pair<Index, Index> slot_pair(std::size_t slot, Index m) {
  std::size_t offset = 0;
  for (Index i = 0; i + 1 < m; ++i) {
    const auto row = static_cast<std::size_t>(m - 1 - i);
    if (slot < offset + row) {
      return {i, static_cast<Index>(static_cast<std::size_t>(i) + 1 + (slot - offset))};
    }
    offset += row;
  }
  return {m - 2, m - 1};
}

}  // namespace stochain
