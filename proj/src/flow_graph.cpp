#include "stochain/flow_graph.hpp"

#include <algorithm>
#include <numeric>

namespace stochain {

int DyadicWindows::window_of(long k) {
  int t = 0;
  while ((2L << t) <= k) ++t;  // smallest t with k < 2^{t+1}
  return t;
}

int DyadicWindows::count_for_horizon(long horizon) {
  return horizon <= 1 ? 1 : window_of(horizon - 1) + 1;
}

bool DyadicWindows::is_complete(int t, long horizon) {
  return (2L << t) <= horizon;
}

void DyadicWindows::add(long k, Real v) {
  const auto t = static_cast<std::size_t>(window_of(k));
  if (sums_.size() <= t) sums_.resize(t + 1, 0.0);
  sums_[t] += v;
}

Real DyadicWindows::total() const {
  Real s = 0.0;
  for (Real v : sums_) s += v;
  return s;
}

FlowAccumulator::FlowAccumulator(Index m, long horizon)
    : m_(m), horizon_(horizon) {
  if (m_ < 2) {
    throw DimensionMismatch("flow accumulation needs at least two agents");
  }
  if (horizon_ < 1) {
    throw Error("flow horizon must be positive");
  }
  pair_sums_.assign(pair_count(m_), 0.0);
  windows_.resize(pair_count(m_));
}

FlowAccumulator FlowAccumulator::from_pair_sums(const Matrix& sums, long horizon) {
  if (sums.rows() != sums.cols()) {
    throw NonSquare("pair sums must form a square matrix");
  }
  FlowAccumulator acc(sums.rows(), horizon);
  for (Index i = 0; i < sums.rows(); ++i) {
    for (Index j = i + 1; j < sums.cols(); ++j) {
      const Real v = sums(i, j) + sums(j, i);
      const std::size_t slot = pair_slot(i, j, acc.m_);
      acc.pair_sums_[slot] = v;
      acc.windows_[slot].add(0, v);
    }
  }
  return acc;
}

void FlowAccumulator::add_step(const Matrix& w, long k) {
  if (w.rows() != m_ || w.cols() != m_) {
    throw DimensionMismatch("step matrix does not match accumulator dimension");
  }
  for (Index i = 0; i < m_; ++i) {
    for (Index j = i + 1; j < m_; ++j) {
      const Real v = w(i, j) + w(j, i);
      if (v != 0.0) {
        const std::size_t slot = pair_slot(i, j, m_);
        pair_sums_[slot] += v;
        windows_[slot].add(k, v);
      }
    }
  }
}

Real FlowAccumulator::pair_sum(Index i, Index j) const {
  if (i == j) {
    throw EqualIndices("pair sum needs two distinct agents");
  }
  if (i < 0 || j < 0 || i >= m_ || j >= m_) {
    throw DimensionMismatch("agent index out of range");
  }
  return pair_sums_[pair_slot(i, j, m_)];
}

const std::vector<Real>& FlowAccumulator::window_sums(Index i, Index j) const {
  if (i == j) {
    throw EqualIndices("window sums need two distinct agents");
  }
  if (i < 0 || j < 0 || i >= m_ || j >= m_) {
    throw DimensionMismatch("agent index out of range");
  }
  return windows_[pair_slot(i, j, m_)].sums();
}

const char* to_string(FlowMode m) {
  return m == FlowMode::sampled ? "sampled" : "expected";
}

FlowAccumulator accumulate_flows(const ChainModel& model, long horizon,
                                 FlowMode mode, std::uint64_t path) {
  FlowAccumulator acc(model.dim(), horizon);
  Matrix w(model.dim(), model.dim());
  for (long k = 0; k < horizon; ++k) {
    if (mode == FlowMode::sampled) {
      model.sample_into(k, path, w);
    } else {
      w = model.expected(k);
    }
    acc.add_step(w, k);
  }
  return acc;
}

Real cut_flow_series(const FlowAccumulator& acc, const IndexSet& s) {
  if (s.ambient_dim() != acc.dim()) {
    throw DimensionMismatch("index set does not match accumulator dimension");
  }
  if (s.is_full()) {
    throw TrivialCut("cut against the full index set has no other side");
  }
  Real total = 0.0;
  for (Index i : s.members()) {
    for (Index j = 0; j < acc.dim(); ++j) {
      if (!s.contains(j)) {
        total += acc.pair_sum(i, j);
      }
    }
  }
  return total;
}

DivergenceDescriptor::DivergenceDescriptor(Index m, std::vector<Divergence> tags)
    : m_(m), tags_(std::move(tags)) {}

DivergenceDescriptor DivergenceDescriptor::from_model(const ChainModel& model) {
  const Index m = model.dim();
  std::vector<Divergence> tags(pair_count(m), Divergence::unknown);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      tags[pair_slot(i, j, m)] = model.pair_divergence(i, j);
    }
  }
  return DivergenceDescriptor(m, std::move(tags));
}

DivergenceDescriptor DivergenceDescriptor::all_unknown(Index m) {
  return DivergenceDescriptor(
      m, std::vector<Divergence>(pair_count(m), Divergence::unknown));
}

Divergence DivergenceDescriptor::pair(Index i, Index j) const {
  if (i == j) {
    throw EqualIndices("pair tag needs two distinct agents");
  }
  if (i < 0 || j < 0 || i >= m_ || j >= m_) {
    throw DimensionMismatch("agent index out of range");
  }
  return tags_[pair_slot(i, j, m_)];
}

const char* to_string(EdgeProvenance p) {
  return p == EdgeProvenance::analytic ? "analytic" : "empirical";
}

InfiniteFlowGraph::InfiniteFlowGraph(Index m, std::vector<FlowEdge> edges,
                                     long horizon, Real threshold)
    : m_(m), edges_(std::move(edges)), horizon_(horizon), threshold_(threshold) {
  adj_.assign(pair_count(m_), false);
  for (FlowEdge& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    adj_[pair_slot(e.i, e.j, m_)] = true;
  }
  std::sort(edges_.begin(), edges_.end(), [](const FlowEdge& a, const FlowEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
}

bool InfiniteFlowGraph::has_edge(Index i, Index j) const {
  if (i == j) return false;
  return adj_[pair_slot(i, j, m_)];
}

InfiniteFlowGraph classify_edges(const FlowAccumulator& acc,
                                 const DivergenceDescriptor& tags,
                                 Real threshold) {
  if (tags.dim() != acc.dim()) {
    throw DimensionMismatch("descriptor does not match accumulator dimension");
  }
  std::vector<FlowEdge> edges;
  for (Index i = 0; i < acc.dim(); ++i) {
    for (Index j = i + 1; j < acc.dim(); ++j) {
      switch (tags.pair(i, j)) {
        case Divergence::divergent:
          edges.push_back({i, j, EdgeProvenance::analytic});
          break;
        case Divergence::summable:
          break;
        case Divergence::unknown: {
          // Sustained growth: the last two dyadic windows both still carry
          // more than `threshold` worth of flow.
          const auto& w = acc.window_sums(i, j);
          const int n = DyadicWindows::count_for_horizon(acc.horizon());
          const Real last = n - 1 < static_cast<int>(w.size())
                                ? w[static_cast<std::size_t>(n - 1)]
                                : 0.0;
          const Real prev = n >= 2 ? (n - 2 < static_cast<int>(w.size())
                                          ? w[static_cast<std::size_t>(n - 2)]
                                          : 0.0)
                                   : last;
          if (last > threshold && prev > threshold) {
            edges.push_back({i, j, EdgeProvenance::empirical});
          }
          break;
        }
      }
    }
  }
  return InfiniteFlowGraph(acc.dim(), std::move(edges), acc.horizon(), threshold);
}

namespace {

// Minimal union-find; the graphs here are tiny.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
};

}  // namespace

ErgodicityPattern connected_components(const InfiniteFlowGraph& graph) {
  const auto m = static_cast<std::size_t>(graph.dim());
  DisjointSets sets(m);
  for (const FlowEdge& e : graph.edges()) {
    sets.unite(static_cast<std::size_t>(e.i), static_cast<std::size_t>(e.j));
  }
  std::vector<std::vector<Index>> by_root(m);
  for (std::size_t i = 0; i < m; ++i) {
    by_root[sets.find(i)].push_back(static_cast<Index>(i));
  }
  std::vector<std::vector<Index>> blocks;
  for (auto& b : by_root) {
    if (!b.empty()) blocks.push_back(std::move(b));
  }
  return ErgodicityPattern(std::move(blocks), graph.dim());
}

PatternPrediction predict_ergodicity_pattern(const ChainModel& model,
                                             FlowMode mode, long horizon,
                                             Real threshold, std::uint64_t path) {
  const DivergenceDescriptor tags = DivergenceDescriptor::from_model(model);
  const FlowAccumulator acc = accumulate_flows(model, horizon, mode, path);
  InfiniteFlowGraph graph = classify_edges(acc, tags, threshold);
  ErgodicityPattern pattern = connected_components(graph);

  std::optional<ErgodicityPattern> cross;
  const FlowMode other =
      mode == FlowMode::sampled ? FlowMode::expected : FlowMode::sampled;
  if (other == FlowMode::sampled || model.has_expected()) {
    const FlowAccumulator acc2 = accumulate_flows(model, horizon, other, path);
    cross = connected_components(classify_edges(acc2, tags, threshold));
  }
  const bool agree = !cross || *cross == pattern;
  return PatternPrediction{std::move(pattern), std::move(graph), mode,
                           std::move(cross), agree};
}

}  // namespace stochain
