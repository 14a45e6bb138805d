#pragma once

#include <string>
#include <vector>

#include "stochain/errors.hpp"
#include "stochain/types.hpp"

namespace stochain {

// A partition of the agent set {0, ..., m-1} into ergodicity classes.
// Canonical form: members sorted within blocks, blocks ordered by their
// smallest member, so two patterns are equal iff their block lists are.
class ErgodicityPattern {
 public:
  ErgodicityPattern(std::vector<std::vector<Index>> blocks, Index m);

  static ErgodicityPattern singletons(Index m);
  static ErgodicityPattern single_block(Index m);

  Index dim() const { return m_; }
  std::size_t block_count() const { return blocks_.size(); }
  const std::vector<std::vector<Index>>& blocks() const { return blocks_; }
  std::size_t block_of(Index i) const;
  bool same_block(Index i, Index j) const { return block_of(i) == block_of(j); }

  // True when every block of *this sits inside a single block of `coarser`.
  bool refines(const ErgodicityPattern& coarser) const;

  bool operator==(const ErgodicityPattern& other) const {
    return m_ == other.m_ && blocks_ == other.blocks_;
  }
  bool operator!=(const ErgodicityPattern& other) const { return !(*this == other); }

  // 1-based rendering for reports, e.g. "{1,2,3} {4,5,6}".
  std::string describe() const;

 private:
  std::vector<std::vector<Index>> blocks_;
  std::vector<std::size_t> block_index_;  // agent -> position in blocks_
  Index m_;
};

}  // namespace stochain
