#pragma once

#include <vector>

#include "stochain/errors.hpp"
#include "stochain/types.hpp"

namespace stochain {

// A square row-stochastic matrix. Construction validates and then cleans the
// entries: negatives within `tolerance` of zero are clamped, each row is
// divided by its sum so downstream code can rely on exact row sums of 1 up to
// roundoff of the division. Anything worse than `tolerance` is a hard error,
// never a silent fix.
class StochasticMatrix {
 public:
  static constexpr Real kDefaultTolerance = 1e-12;

  explicit StochasticMatrix(Matrix entries, Real tolerance = kDefaultTolerance);

  static StochasticMatrix identity(Index m);

  Index dim() const { return w_.rows(); }
  const Matrix& mat() const { return w_; }
  Real operator()(Index i, Index j) const { return w_(i, j); }

 private:
  Matrix w_;
};

// Validation entry point with the contract spelled out by name.
StochasticMatrix validate_stochastic(const Matrix& entries,
                                     Real tolerance = StochasticMatrix::kDefaultTolerance);

// A nonempty subset of {0, ..., m-1} with a remembered ambient dimension.
// Members are stored sorted and deduplicated. Agent indices are 0-based in
// the whole C++ API; file formats use 1-based labels and convert at the edge.
class IndexSet {
 public:
  IndexSet(std::vector<Index> members, Index ambient_dim);

  Index ambient_dim() const { return m_; }
  Index size() const { return static_cast<Index>(members_.size()); }
  bool is_full() const { return size() == m_; }
  bool contains(Index i) const;
  const std::vector<Index>& members() const { return members_; }
  IndexSet complement() const;

 private:
  std::vector<Index> members_;
  Index m_;
};

// Total mass crossing the cut (S, S-complement) in both directions:
//   sum over i in S, j not in S of M(i,j) + M(j,i).
// S must be a proper subset; cutting the full ambient set is an error.
Real cut_flow(const StochasticMatrix& m, const IndexSet& s);

// M(i,j) + M(j,i) for one unordered pair, i != j.
Real pair_flow(const StochasticMatrix& m, Index i, Index j);

// One dynamics step x -> M x.
Vector apply(const StochasticMatrix& m, const Vector& x);

// Entrywise l1 distance, sum over all (i,j) of |A(i,j) - B(i,j)|.
Real l1_matrix_distance(const StochasticMatrix& a, const StochasticMatrix& b);

}  // namespace stochain
