#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stochain/rng.hpp"
#include "stochain/schedule.hpp"
#include "stochain/stochastic_matrix.hpp"

namespace stochain {

enum class ModelKind {
  gossip,
  broadcast_gossip,
  link_failure,
  deterministic_sequence,
  permutation,
  simplex_row,
  harmonic_pair,
};

const char* to_string(ModelKind k);

// One point of a finite sample space: the matrix and its probability.
struct Outcome {
  Real prob;
  Matrix matrix;
};
using OutcomeSet = std::vector<Outcome>;

// A random chain {W(k)}: an independent random stochastic matrix per step.
//
// Sampling is counter-based. The matrix returned for (seed_base, path, k) is
// a pure function of those three values, so accumulating flows forward,
// simulating trajectories, or re-sampling a single step in a test all see the
// same realization. `path` names an independent realization of the whole
// chain (trial number, Monte Carlo replicate, ...).
class ChainModel {
 public:
  virtual ~ChainModel() = default;

  Index dim() const { return m_; }
  ModelKind kind() const { return kind_; }
  std::uint64_t seed_base() const { return seed_base_; }
  virtual std::string describe() const = 0;

  // Validated sample of W(k) on realization `path`.
  StochasticMatrix sample(long k, std::uint64_t path = 0) const;

  // Hot-loop variant: writes raw entries into `out` (resized as needed) and
  // skips revalidation. Samplers are property-tested to emit valid rows.
  void sample_into(long k, std::uint64_t path, Matrix& out) const;

  // Closed-form E[W(k)], when the model has one.
  virtual bool has_expected() const = 0;
  virtual Matrix expected(long k) const;

  // Analytic summability of the pair flow series sum_k E[W_ij(k) + W_ji(k)]
  // for i != j; `unknown` when no closed form decides it. For the built-in
  // models the same tag is valid for sampled paths almost surely.
  virtual Divergence pair_divergence(Index i, Index j) const;

  // Models with a finite sample space expose it for exact expectations.
  virtual std::optional<OutcomeSet> outcomes(long k) const;

  // E[W(k)^T W(k)] in closed form, or nullopt. The default enumerates
  // outcomes() when present.
  virtual std::optional<Matrix> expected_gram(long k) const;

  // Entry (i,j) is E[W_ii W_ij + W_jj W_ji], the coupling between staying
  // put and listening. Same availability rules as expected_gram.
  virtual std::optional<Matrix> expected_feedback(long k) const;

 protected:
  ChainModel(ModelKind kind, Index m, std::uint64_t seed_base);

  // Fill `out` (already sized m x m) with the step-k sample. `stream` is the
  // model's own stream for (path, k); `path` is forwarded so composed models
  // can drive their base chain.
  virtual void do_sample(long k, std::uint64_t path, RngStream& stream,
                         Matrix& out) const = 0;

  void check_pair(Index i, Index j) const;

 private:
  ModelKind kind_;
  Index m_;
  std::uint64_t seed_base_;
};

using ModelPtr = std::shared_ptr<const ChainModel>;

// ---------------------------------------------------------------------------
// Pairwise gossip. At step k one unordered link {i,j} activates and the two
// endpoints average their values:  W = I - (e_i - e_j)(e_i - e_j)^T / 2.
// ---------------------------------------------------------------------------

struct LinkRate {
  Index i;
  Index j;
  Schedule rate;
};

struct GossipParams {
  Index m = 0;
  std::vector<LinkRate> links;
  // When true, the per-step link rates are scaled by their sum to give the
  // activation distribution; when false they must already sum to 1 per step.
  bool normalize = true;
};

class GossipModel final : public ChainModel {
 public:
  GossipModel(GossipParams params, std::uint64_t seed_base);

  // Activation probabilities at step k, upper triangle (i < j), zero
  // elsewhere. Errors if the step's rate mass is degenerate.
  Matrix activation_matrix(long k) const;

  std::string describe() const override;
  bool has_expected() const override { return true; }
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;
  std::optional<OutcomeSet> outcomes(long k) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;

 private:
  // Evaluates per-link probabilities into a scratch buffer, returns mass.
  void link_probs(long k, std::vector<Real>& probs) const;

  GossipParams p_;
  Real rate_floor_sum_;  // sum of per-link lower limits, bounds the mass below
};

// ---------------------------------------------------------------------------
// Broadcast gossip. A uniformly chosen node i wakes up and its current
// neighbors move toward it:  W = I - gamma(k) * sum_{j in N_i} e_j (e_j-e_i)^T.
// ---------------------------------------------------------------------------

using EdgeList = std::vector<std::pair<Index, Index>>;

struct BroadcastParams {
  Index m = 0;
  EdgeList edges;                                // static topology, or
  std::function<EdgeList(long)> topology;        // per-step topology (optional)
  Schedule mixing = Schedule::constant(0.5);     // gamma(k), values in (0, 1]
};

class BroadcastGossipModel final : public ChainModel {
 public:
  BroadcastGossipModel(BroadcastParams params, std::uint64_t seed_base);

  std::string describe() const override;
  bool has_expected() const override { return true; }
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;
  std::optional<OutcomeSet> outcomes(long k) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;

 private:
  const std::vector<Index>& neighbors_at(long k, Index node,
                                         std::vector<std::vector<Index>>& scratch) const;
  std::vector<std::vector<Index>> build_adjacency(const EdgeList& edges) const;

  BroadcastParams p_;
  std::vector<std::vector<Index>> static_adj_;  // empty when topology is dynamic
  bool dynamic_;
};

// ---------------------------------------------------------------------------
// Link failures on top of a base chain. F(k) is a random binary matrix with
// zero diagonal; entry (i,j) of the base sample is suppressed when F_ij = 1
// and its mass folds back onto the diagonal:
//   U = W .* (ee^T - F) + diag((W .* F) e).
// ---------------------------------------------------------------------------

// Deterministic composition of a known sample and failure matrix.
StochasticMatrix link_failure_compose(const StochasticMatrix& w, const Matrix& f);

// Samples F: i.i.d. off-diagonal Bernoulli(p) entries drawn in row-major
// order, zero diagonal. LinkFailureModel consumes its stream in the same
// order, so a sample of that model equals compose(base sample, this F).
Matrix uniform_failure_sample(Real p, Index m, RngStream& stream);

struct FailureSpec {
  static FailureSpec failure_probability(Schedule p);
  static FailureSpec survival_probability(Schedule q);

  // Exactly one of the two is set; both describe p_k = P(F_ij(k) = 1).
  std::optional<Schedule> failure;
  std::optional<Schedule> survival;
};

class LinkFailureModel final : public ChainModel {
 public:
  LinkFailureModel(ModelPtr base, FailureSpec spec, std::uint64_t seed_base);

  Real failure_prob(long k) const;
  const ModelPtr& base() const { return base_; }

  std::string describe() const override;
  bool has_expected() const override;
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;

 private:
  ModelPtr base_;
  FailureSpec spec_;
};

// ---------------------------------------------------------------------------
// Uniformly random permutation matrices (relabeling chain).
// ---------------------------------------------------------------------------

class PermutationModel final : public ChainModel {
 public:
  PermutationModel(Index m, std::uint64_t seed_base);

  std::string describe() const override;
  bool has_expected() const override { return true; }
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;
  std::optional<Matrix> expected_gram(long k) const override;
  std::optional<Matrix> expected_feedback(long k) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;
};

// ---------------------------------------------------------------------------
// Three agents; rows 1 and 3 are fixed at e_1 and e_3, row 2 is drawn
// uniformly from the simplex each step.
// ---------------------------------------------------------------------------

class SimplexRowModel final : public ChainModel {
 public:
  explicit SimplexRowModel(std::uint64_t seed_base);

  std::string describe() const override;
  bool has_expected() const override { return true; }
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;
  std::optional<Matrix> expected_gram(long k) const override;
  std::optional<Matrix> expected_feedback(long k) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;
};

// ---------------------------------------------------------------------------
// The deterministic 2x2 chain with off-diagonal 1/(k+2). Mutual ergodicity
// with a divergent l1 distance from the identity chain, which is why it gets
// its own kind.
// ---------------------------------------------------------------------------

Matrix harmonic_pair_matrix(long k);

class HarmonicPairModel final : public ChainModel {
 public:
  HarmonicPairModel();

  std::string describe() const override;
  bool has_expected() const override { return true; }
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;
  std::optional<OutcomeSet> outcomes(long k) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;
};

// ---------------------------------------------------------------------------
// Arbitrary deterministic sequences k -> W(k), including the identity chain.
// ---------------------------------------------------------------------------

class DeterministicModel final : public ChainModel {
 public:
  DeterministicModel(Index m, std::function<Matrix(long)> step_fn,
                     std::string label,
                     std::function<Divergence(Index, Index)> tag_fn = nullptr,
                     bool is_identity = false);

  bool is_identity_chain() const { return identity_; }

  std::string describe() const override;
  bool has_expected() const override { return true; }
  Matrix expected(long k) const override;
  Divergence pair_divergence(Index i, Index j) const override;
  std::optional<OutcomeSet> outcomes(long k) const override;

 protected:
  void do_sample(long k, std::uint64_t path, RngStream& stream,
                 Matrix& out) const override;

 private:
  std::function<Matrix(long)> fn_;
  std::string label_;
  std::function<Divergence(Index, Index)> tags_;
  bool identity_;
};

ModelPtr make_identity_model(Index m);

}  // namespace stochain
