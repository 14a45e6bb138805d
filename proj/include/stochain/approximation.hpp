#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "stochain/chain_model.hpp"
#include "stochain/flow_graph.hpp"
#include "stochain/pattern.hpp"

namespace stochain {

// Verdict on whether two chains differ by a summable amount. Chains whose
// entrywise differences have finite total series keep the same agreement
// classes, so "l1_close" is the license to swap one chain for the other.
enum class DistanceVerdict { l1_close, diverging, unknown };
const char* to_string(DistanceVerdict v);

struct ChainDistanceReport {
  long horizon = 0;
  FlowMode mode = FlowMode::sampled;
  // Truncated series sum_{k<horizon} |A_ij(k) - B_ij(k)| per entry.
  Matrix entry_sums;
  // Dyadic windows of the per-step total difference, as in FlowAccumulator.
  std::vector<Real> window_sums;
  DistanceVerdict verdict = DistanceVerdict::unknown;
  // analytic: decided from the models' closed forms; empirical: decided by
  // the sustained-growth heuristic on window_sums.
  EdgeProvenance provenance = EdgeProvenance::empirical;

  Real total() const { return entry_sums.sum(); }
};

// Accumulates the entrywise distance series between two same-dimension
// chains over [0, horizon). In sampled mode both chains are realized on the
// same path argument; wrapper models built on a shared base then see
// identical base randomness, which is what the swap guarantee is about.
ChainDistanceReport l1_chain_distance(const ChainModel& a, const ChainModel& b,
                                      long horizon, FlowMode mode,
                                      Real threshold = 0.1,
                                      std::uint64_t path = 0);

// Zeroes the mass crossing the cut (S, complement) and folds it onto the
// diagonal, one row at a time. The result is block-diagonal under the
// S/complement split but stays in the original index order.
StochasticMatrix cut_zero_approximation(const StochasticMatrix& a, const IndexSet& s);

// Applies the cut-zero fold for every block of the partition at once: entry
// (i,j) survives iff i and j share a block, suppressed mass moves to the
// diagonal. Original index order is kept so trajectories of the original
// and the approximation stay comparable entrywise.
StochasticMatrix diagonal_approximation(const StochasticMatrix& w,
                                        const ErgodicityPattern& pattern);

// Raw in-place variant for sampler hot loops; `w` must already be square
// with the pattern's dimension.
void diagonal_approximation_into(Matrix& w, const ErgodicityPattern& pattern);

// Per-block mixing toward the block average. Before start_step the result
// is the identity; afterwards each block W^(r) becomes
//   (1 - d(k)) W^(r) + d(k)/|S_r| * ones.
// amount(k) must stay in [0, 1/2].
struct MixingSchedule {
  std::function<Real(long)> amount;
  long start_step = 0;
};

StochasticMatrix mixing_perturbation(const StochasticMatrix& wtilde,
                                     const ErgodicityPattern& pattern,
                                     const MixingSchedule& schedule, long k);

// ---------------------------------------------------------------------------
// Chain wrappers that realize the two approximation constructions as models,
// sharing the base chain's randomness step for step.
// ---------------------------------------------------------------------------

// Replaces the first `prefix_steps` matrices by the identity; afterwards the
// wrapped chain passes through untouched.
class PrefixIdentityModel final : public ChainModel {
 public:
  PrefixIdentityModel(ModelPtr base, long prefix_steps);

  const ModelPtr& base() const { return base_; }
  long prefix_steps() const { return prefix_; }

  std::string describe() const override;
  bool has_expected() const override { return base_->has_expected(); }
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;
  std::optional<OutcomeSet> outcomes(long k) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;

 private:
  ModelPtr base_;
  long prefix_;
};

// The diagonal approximation of a chain with respect to a fixed partition,
// applied to every step sample (and, linearly, to every expectation).
class DiagonalApproxModel final : public ChainModel {
 public:
  DiagonalApproxModel(ModelPtr base, ErgodicityPattern pattern);

  const ModelPtr& base() const { return base_; }
  const ErgodicityPattern& pattern() const { return pattern_; }

  std::string describe() const override;
  bool has_expected() const override { return base_->has_expected(); }
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;
  std::optional<OutcomeSet> outcomes(long k) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;

 private:
  ModelPtr base_;
  ErgodicityPattern pattern_;
};

ModelPtr make_prefix_identity(ModelPtr base, long prefix_steps);
ModelPtr make_diagonal_approximation(ModelPtr base, ErgodicityPattern pattern);

}  // namespace stochain
