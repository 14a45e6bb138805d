#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stochain/chain_model.hpp"
#include "stochain/pairs.hpp"
#include "stochain/pattern.hpp"

namespace stochain {

// Dyadic step windows. Window t collects steps k with 2^t <= k < 2^{t+1},
// except that step 0 is folded into window 0, so the windows exactly
// partition [0, horizon). Per-window sums are how we tell "still flowing"
// from "dried up" at a finite horizon: a tail that keeps each window above a
// threshold is the signature of a divergent series, while any summable tail
// sends the window sums to zero.
class DyadicWindows {
 public:
  static int window_of(long k);
  static int count_for_horizon(long horizon);
  // A window is complete when the horizon covers all of it.
  static bool is_complete(int t, long horizon);

  void add(long k, Real v);
  const std::vector<Real>& sums() const { return sums_; }
  Real total() const;

 private:
  std::vector<Real> sums_;
};

// Accumulated pair flows W_ij(k) + W_ji(k) over steps [0, horizon), kept both
// as totals and per dyadic window.
class FlowAccumulator {
 public:
  FlowAccumulator(Index m, long horizon);

  // Diagnostic constructor: totals only, with all mass assigned to window 0.
  static FlowAccumulator from_pair_sums(const Matrix& sums, long horizon);

  void add_step(const Matrix& w, long k);

  Index dim() const { return m_; }
  long horizon() const { return horizon_; }
  Real pair_sum(Index i, Index j) const;
  const std::vector<Real>& window_sums(Index i, Index j) const;

 private:
  Index m_;
  long horizon_;
  std::vector<Real> pair_sums_;
  std::vector<DyadicWindows> windows_;
};

enum class FlowMode { sampled, expected };
const char* to_string(FlowMode m);

// Runs the chain over [0, horizon) and accumulates pair flows, either from
// one sampled realization (`path` selects it) or from closed-form step
// expectations (NoClosedForm if the model has none).
FlowAccumulator accumulate_flows(const ChainModel& model, long horizon,
                                 FlowMode mode, std::uint64_t path = 0);

// Accumulated flow across a cut: sum of pair sums with exactly one endpoint
// in S. Same triviality rules as cut_flow.
Real cut_flow_series(const FlowAccumulator& acc, const IndexSet& s);

// Per-pair analytic summability tags, as claimed by a model.
class DivergenceDescriptor {
 public:
  static DivergenceDescriptor from_model(const ChainModel& model);
  static DivergenceDescriptor all_unknown(Index m);

  Index dim() const { return m_; }
  Divergence pair(Index i, Index j) const;

 private:
  DivergenceDescriptor(Index m, std::vector<Divergence> tags);
  Index m_;
  std::vector<Divergence> tags_;
};

enum class EdgeProvenance { analytic, empirical };
const char* to_string(EdgeProvenance p);

struct FlowEdge {
  Index i;
  Index j;
  EdgeProvenance provenance;
};

// The graph whose edges carry unbounded accumulated flow; its connected
// components are the predicted ergodicity classes.
class InfiniteFlowGraph {
 public:
  InfiniteFlowGraph(Index m, std::vector<FlowEdge> edges, long horizon,
                    Real threshold);

  Index dim() const { return m_; }
  const std::vector<FlowEdge>& edges() const { return edges_; }
  bool has_edge(Index i, Index j) const;
  long horizon() const { return horizon_; }
  Real threshold() const { return threshold_; }

 private:
  Index m_;
  std::vector<FlowEdge> edges_;
  std::vector<bool> adj_;  // packed pair slots
  long horizon_;
  Real threshold_;
};

// Decides each pair by its analytic tag when one exists; otherwise falls back
// to the sustained-growth heuristic: an edge is kept iff the last two dyadic
// windows each exceed `threshold`.
InfiniteFlowGraph classify_edges(const FlowAccumulator& acc,
                                 const DivergenceDescriptor& tags,
                                 Real threshold = 0.1);

ErgodicityPattern connected_components(const InfiniteFlowGraph& graph);

struct PatternPrediction {
  ErgodicityPattern pattern;  // from the requested mode
  InfiniteFlowGraph graph;
  FlowMode mode;
  // Pattern from the other mode when it could be computed, plus agreement.
  std::optional<ErgodicityPattern> cross_check;
  bool modes_agree = true;
};

// accumulate -> classify -> components, plus a sampled/expected cross-check
// whenever both modes are available. Disagreement is reported in the result,
// not thrown: at a finite horizon the heuristic is allowed to be wrong.
PatternPrediction predict_ergodicity_pattern(const ChainModel& model,
                                             FlowMode mode, long horizon,
                                             Real threshold = 0.1,
                                             std::uint64_t path = 0);

}  // namespace stochain
