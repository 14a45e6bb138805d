#include "stochain/stochastic_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stochain {

StochasticMatrix::StochasticMatrix(Matrix entries, Real tolerance)
    : w_(std::move(entries)) {
  if (w_.rows() != w_.cols() || w_.rows() == 0) {
    throw NonSquare("stochastic matrix must be square and nonempty, got " +
                    std::to_string(w_.rows()) + "x" + std::to_string(w_.cols()));
  }
  const Index m = w_.rows();
  for (Index i = 0; i < m; ++i) {
    Real sum = 0.0;
    for (Index j = 0; j < m; ++j) {
      Real v = w_(i, j);
      if (v < -tolerance || std::isnan(v)) {
        throw NegativeEntry("entry (" + std::to_string(i) + "," +
                            std::to_string(j) + ") = " + std::to_string(v) +
                            " is negative beyond tolerance");
      }
      if (v < 0.0) {
        v = 0.0;  // roundoff-sized negative, clamp
        w_(i, j) = v;
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw RowSumViolation("row " + std::to_string(i) + " sums to " +
                            std::to_string(sum) + ", expected 1");
    }
    if (sum != 1.0) {
      w_.row(i) /= sum;
    }
  }
}

StochasticMatrix StochasticMatrix::identity(Index m) {
  return StochasticMatrix(Matrix::Identity(m, m));
}

StochasticMatrix validate_stochastic(const Matrix& entries, Real tolerance) {
  return StochasticMatrix(entries, tolerance);
}

IndexSet::IndexSet(std::vector<Index> members, Index ambient_dim)
    : members_(std::move(members)), m_(ambient_dim) {
  if (m_ <= 0) {
    throw DimensionMismatch("index set needs a positive ambient dimension");
  }
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (members_.empty()) {
    throw TrivialCut("index set is empty");
  }
  if (members_.front() < 0 || members_.back() >= m_) {
    throw DimensionMismatch("index set member out of range for ambient dimension " +
                            std::to_string(m_));
  }
}

bool IndexSet::contains(Index i) const {
  return std::binary_search(members_.begin(), members_.end(), i);
}

IndexSet IndexSet::complement() const {
  std::vector<Index> rest;
  rest.reserve(static_cast<std::size_t>(m_ - size()));
  for (Index i = 0; i < m_; ++i) {
    if (!contains(i)) rest.push_back(i);
  }
  return IndexSet(std::move(rest), m_);
}

Real cut_flow(const StochasticMatrix& m, const IndexSet& s) {
  if (s.ambient_dim() != m.dim()) {
    throw DimensionMismatch("index set ambient dimension " +
                            std::to_string(s.ambient_dim()) +
                            " does not match matrix dimension " +
                            std::to_string(m.dim()));
  }
  if (s.is_full()) {
    throw TrivialCut("cut against the full index set has no other side");
  }
  Real total = 0.0;
  for (Index i : s.members()) {
    for (Index j = 0; j < m.dim(); ++j) {
      if (!s.contains(j)) {
        total += m(i, j) + m(j, i);
      }
    }
  }
  return total;
}

Real pair_flow(const StochasticMatrix& m, Index i, Index j) {
  if (i == j) {
    throw EqualIndices("pair flow needs two distinct indices, got " +
                       std::to_string(i) + " twice");
  }
  if (i < 0 || j < 0 || i >= m.dim() || j >= m.dim()) {
    throw DimensionMismatch("pair index out of range");
  }
  return m(i, j) + m(j, i);
}

Vector apply(const StochasticMatrix& m, const Vector& x) {
  if (x.size() != m.dim()) {
    throw DimensionMismatch("state has size " + std::to_string(x.size()) +
                            ", matrix is " + std::to_string(m.dim()) + "x" +
                            std::to_string(m.dim()));
  }
  return m.mat() * x;
}

Real l1_matrix_distance(const StochasticMatrix& a, const StochasticMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("matrices of size " + std::to_string(a.dim()) +
                            " and " + std::to_string(b.dim()) +
                            " are not comparable");
  }
  return (a.mat() - b.mat()).cwiseAbs().sum();
}

}  // namespace stochain
