#include "stochain/pattern.hpp"

#include <algorithm>
#include <numeric>

namespace stochain {

ErgodicityPattern::ErgodicityPattern(std::vector<std::vector<Index>> blocks,
                                     Index m)
    : blocks_(std::move(blocks)), m_(m) {
  if (m_ < 1) {
    throw InvalidPartition("pattern needs a positive agent count");
  }
  for (auto& block : blocks_) {
    if (block.empty()) {
      throw InvalidPartition("pattern contains an empty block");
    }
    std::sort(block.begin(), block.end());
  }
  std::sort(blocks_.begin(), blocks_.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  block_index_.assign(static_cast<std::size_t>(m_), blocks_.size());
  std::size_t covered = 0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (Index i : blocks_[b]) {
      if (i < 0 || i >= m_) {
        throw InvalidPartition("pattern member " + std::to_string(i) +
                               " is out of range");
      }
      auto& slot = block_index_[static_cast<std::size_t>(i)];
      if (slot != blocks_.size()) {
        throw InvalidPartition("agent " + std::to_string(i) +
                               " appears in two blocks");
      }
      slot = b;
      ++covered;
    }
  }
  if (covered != static_cast<std::size_t>(m_)) {
    throw InvalidPartition("pattern does not cover every agent");
  }
}

ErgodicityPattern ErgodicityPattern::singletons(Index m) {
  std::vector<std::vector<Index>> blocks(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    blocks[static_cast<std::size_t>(i)] = {i};
  }
  return ErgodicityPattern(std::move(blocks), m);
}

ErgodicityPattern ErgodicityPattern::single_block(Index m) {
  std::vector<Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Index{0});
  return ErgodicityPattern({std::move(all)}, m);
}

std::size_t ErgodicityPattern::block_of(Index i) const {
  if (i < 0 || i >= m_) {
    throw InvalidPartition("agent index " + std::to_string(i) + " out of range");
  }
  return block_index_[static_cast<std::size_t>(i)];
}

bool ErgodicityPattern::refines(const ErgodicityPattern& coarser) const {
  if (m_ != coarser.m_) return false;
  for (const auto& block : blocks_) {
    const std::size_t home = coarser.block_of(block.front());
    for (Index i : block) {
      if (coarser.block_of(i) != home) return false;
    }
  }
  return true;
}

std::string ErgodicityPattern::describe() const {
  std::string out;
  for (const auto& block : blocks_) {
    if (!out.empty()) out += ' ';
    out += '{';
    for (std::size_t p = 0; p < block.size(); ++p) {
      if (p > 0) out += ',';
      out += std::to_string(block[p] + 1);  // 1-based for humans
    }
    out += '}';
  }
  return out;
}

}  // namespace stochain
