#pragma once

// Shared helpers for the test binaries: small random generators built on the
// library's own stream type so failures reproduce from the printed seed.

#include <vector>

#include "stochain/rng.hpp"
#include "stochain/stochastic_matrix.hpp"
#include "stochain/types.hpp"

namespace stochain::testutil {

// Rows drawn uniformly from the simplex (normalized exponentials).
inline Matrix random_stochastic(RngStream& s, Index m) {
  Matrix w(m, m);
  for (Index i = 0; i < m; ++i) {
    Real sum = 0.0;
    for (Index j = 0; j < m; ++j) {
      Real v = -std::log(s.next_real_pos());
      w(i, j) = v;
      sum += v;
    }
    w.row(i) /= sum;
  }
  return w;
}

// Rows are random multiples of 1/64 summing to exactly 1.0, so every value
// in sight is an exact dyadic rational and downstream sums and folds incur
// no roundoff at all. Bitwise comparisons against a second computation route
// are legitimate on these.
inline Matrix random_dyadic_stochastic(RngStream& s, Index m) {
  Matrix w = Matrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    for (int unit = 0; unit < 64; ++unit) {
      w(i, static_cast<Index>(s.next_below(static_cast<std::uint64_t>(m)))) +=
          1.0 / 64.0;
    }
  }
  return w;
}

// A nonempty proper subset of {0,...,m-1}, uniform over the 2^m - 2 choices.
inline IndexSet random_proper_subset(RngStream& s, Index m) {
  auto mask = 1 + s.next_below((1ull << m) - 2);
  std::vector<Index> members;
  for (Index i = 0; i < m; ++i) {
    if (mask & (1ull << i)) members.push_back(i);
  }
  return IndexSet(std::move(members), m);
}

}  // namespace stochain::testutil
