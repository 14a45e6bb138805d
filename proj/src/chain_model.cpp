#include "stochain/chain_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stochain {

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gossip: return "gossip";
    case ModelKind::broadcast_gossip: return "broadcast_gossip";
    case ModelKind::link_failure: return "link_failure";
    case ModelKind::deterministic_sequence: return "deterministic_sequence";
    case ModelKind::permutation: return "permutation";
    case ModelKind::simplex_row: return "simplex_row";
    case ModelKind::harmonic_pair: return "harmonic_pair";
  }
  return "unknown";
}

ChainModel::ChainModel(ModelKind kind, Index m, std::uint64_t seed_base)
    : kind_(kind), m_(m), seed_base_(seed_base) {
  if (m_ < 1) {
    throw DimensionMismatch("chain model needs at least one agent");
  }
}

StochasticMatrix ChainModel::sample(long k, std::uint64_t path) const {
  Matrix out;
  sample_into(k, path, out);
  return StochasticMatrix(std::move(out));
}

void ChainModel::sample_into(long k, std::uint64_t path, Matrix& out) const {
  if (k < 0) {
    throw Error("chain steps are indexed from 0, got " + std::to_string(k));
  }
  out.resize(m_, m_);
  RngStream stream = stream_at(seed_base_, path, k);
  do_sample(k, path, stream, out);
}

Matrix ChainModel::expected(long k) const {
  (void)k;
  throw NoClosedForm("no closed-form expectation for " + describe());
}

Divergence ChainModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  return Divergence::unknown;
}

std::optional<OutcomeSet> ChainModel::outcomes(long k) const {
  (void)k;
  return std::nullopt;
}

std::optional<Matrix> ChainModel::expected_gram(long k) const {
  auto set = outcomes(k);
  if (!set) return std::nullopt;
  Matrix h = Matrix::Zero(m_, m_);
  for (const Outcome& o : *set) {
    h.noalias() += o.prob * (o.matrix.transpose() * o.matrix);
  }
  return h;
}

std::optional<Matrix> ChainModel::expected_feedback(long k) const {
  auto set = outcomes(k);
  if (!set) return std::nullopt;
  Matrix f = Matrix::Zero(m_, m_);
  for (const Outcome& o : *set) {
    const Matrix& w = o.matrix;
    for (Index i = 0; i < m_; ++i) {
      for (Index j = 0; j < m_; ++j) {
        if (i == j) continue;
        f(i, j) += o.prob * (w(i, i) * w(i, j) + w(j, j) * w(j, i));
      }
    }
  }
  return f;
}

void ChainModel::check_pair(Index i, Index j) const {
  if (i == j) {
    throw EqualIndices("pair requires two distinct agents, got " +
                       std::to_string(i) + " twice");
  }
  if (i < 0 || j < 0 || i >= m_ || j >= m_) {
    throw DimensionMismatch("agent index out of range");
  }
}

// --------------------------------------------------------------------------
// Gossip
// --------------------------------------------------------------------------

GossipModel::GossipModel(GossipParams params, std::uint64_t seed_base)
    : ChainModel(ModelKind::gossip, params.m, seed_base), p_(std::move(params)) {
  if (dim() < 2) {
    throw DimensionMismatch("gossip needs at least two agents");
  }
  if (p_.links.empty()) {
    throw DegenerateSchedule("gossip needs at least one link");
  }
  for (LinkRate& l : p_.links) {
    check_pair(l.i, l.j);
    if (l.i > l.j) std::swap(l.i, l.j);
  }
  std::sort(p_.links.begin(), p_.links.end(), [](const LinkRate& a, const LinkRate& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (std::size_t l = 1; l < p_.links.size(); ++l) {
    if (p_.links[l - 1].i == p_.links[l].i && p_.links[l - 1].j == p_.links[l].j) {
      throw DegenerateSchedule("duplicate gossip link (" +
                               std::to_string(p_.links[l].i) + "," +
                               std::to_string(p_.links[l].j) + ")");
    }
  }
  rate_floor_sum_ = 0.0;
  for (const LinkRate& l : p_.links) {
    rate_floor_sum_ += l.rate.lower_limit();
  }
}

void GossipModel::link_probs(long k, std::vector<Real>& probs) const {
  probs.resize(p_.links.size());
  Real mass = 0.0;
  for (std::size_t l = 0; l < p_.links.size(); ++l) {
    probs[l] = p_.links[l].rate(k);
    mass += probs[l];
  }
  if (p_.normalize) {
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      throw DegenerateSchedule("gossip link rates vanish at step " +
                               std::to_string(k));
    }
    for (Real& p : probs) p /= mass;
  } else if (std::abs(mass - 1.0) > 1e-12) {
    throw DegenerateSchedule("gossip activation mass is " + std::to_string(mass) +
                             " at step " + std::to_string(k) + ", expected 1");
  }
}

Matrix GossipModel::activation_matrix(long k) const {
  std::vector<Real> probs;
  link_probs(k, probs);
  Matrix p = Matrix::Zero(dim(), dim());
  for (std::size_t l = 0; l < p_.links.size(); ++l) {
    p(p_.links[l].i, p_.links[l].j) = probs[l];
  }
  return p;
}

void GossipModel::do_sample(long k, std::uint64_t, RngStream& stream,
                            Matrix& out) const {
  thread_local std::vector<Real> probs;
  link_probs(k, probs);
  const Real u = stream.next_real();
  std::ptrdiff_t chosen = -1;
  Real cum = 0.0;
  for (std::size_t l = 0; l < probs.size(); ++l) {
    cum += probs[l];
    if (u < cum) {
      chosen = static_cast<std::ptrdiff_t>(l);
      break;
    }
  }
  if (chosen < 0) {
    // u landed in the roundoff sliver past the accumulated mass; take the
    // last link that has any probability.
    for (std::size_t l = probs.size(); l-- > 0;) {
      if (probs[l] > 0.0) {
        chosen = static_cast<std::ptrdiff_t>(l);
        break;
      }
    }
  }
  const LinkRate& link = p_.links[static_cast<std::size_t>(chosen)];
  out.setIdentity();
  out(link.i, link.i) = 0.5;
  out(link.j, link.j) = 0.5;
  out(link.i, link.j) = 0.5;
  out(link.j, link.i) = 0.5;
}

Matrix GossipModel::expected(long k) const {
  std::vector<Real> probs;
  link_probs(k, probs);
  Matrix e = Matrix::Identity(dim(), dim());
  for (std::size_t l = 0; l < p_.links.size(); ++l) {
    const Real half = probs[l] / 2.0;
    const Index i = p_.links[l].i;
    const Index j = p_.links[l].j;
    e(i, i) -= half;
    e(j, j) -= half;
    e(i, j) += half;
    e(j, i) += half;
  }
  return e;
}

Divergence GossipModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  if (i > j) std::swap(i, j);
  const LinkRate* link = nullptr;
  for (const LinkRate& l : p_.links) {
    if (l.i == i && l.j == j) {
      link = &l;
      break;
    }
  }
  if (link == nullptr || link->rate.is_zero()) {
    return Divergence::summable;
  }
  if (!p_.normalize) {
    return link->rate.divergence();
  }
  // Normalized rates: the step mass is bounded above by the sum of the rate
  // suprema, so a divergent raw rate stays divergent. A summable raw rate
  // stays summable only if the mass is bounded away from zero, which the
  // constant parts of the other links guarantee.
  if (!link->rate.summable()) {
    return Divergence::divergent;
  }
  return rate_floor_sum_ > 0.0 ? Divergence::summable : Divergence::unknown;
}

std::optional<OutcomeSet> GossipModel::outcomes(long k) const {
  std::vector<Real> probs;
  link_probs(k, probs);
  OutcomeSet set;
  set.reserve(probs.size());
  for (std::size_t l = 0; l < probs.size(); ++l) {
    if (probs[l] == 0.0) continue;
    Matrix w = Matrix::Identity(dim(), dim());
    const Index i = p_.links[l].i;
    const Index j = p_.links[l].j;
    w(i, i) = 0.5;
    w(j, j) = 0.5;
    w(i, j) = 0.5;
    w(j, i) = 0.5;
    set.push_back({probs[l], std::move(w)});
  }
  return set;
}

std::string GossipModel::describe() const {
  return "gossip m=" + std::to_string(dim()) +
         " links=" + std::to_string(p_.links.size()) +
         (p_.normalize ? " normalized" : " raw");
}

// --------------------------------------------------------------------------
// Broadcast gossip
// --------------------------------------------------------------------------

BroadcastGossipModel::BroadcastGossipModel(BroadcastParams params,
                                           std::uint64_t seed_base)
    : ChainModel(ModelKind::broadcast_gossip, params.m, seed_base),
      p_(std::move(params)),
      dynamic_(static_cast<bool>(p_.topology)) {
  if (dim() < 2) {
    throw DimensionMismatch("broadcast gossip needs at least two agents");
  }
  if (dynamic_ && !p_.edges.empty()) {
    throw Error("broadcast gossip takes a static edge list or a topology function, not both");
  }
  const Real g0 = p_.mixing.upper_bound();
  if (!(g0 > 0.0) || g0 > 1.0) {
    throw DegenerateSchedule("broadcast mixing must take values in (0, 1]");
  }
  if (!dynamic_) {
    static_adj_ = build_adjacency(p_.edges);
  }
}

std::vector<std::vector<Index>> BroadcastGossipModel::build_adjacency(
    const EdgeList& edges) const {
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(dim()));
  for (const auto& [i, j] : edges) {
    check_pair(i, j);
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return adj;
}

void BroadcastGossipModel::do_sample(long k, std::uint64_t, RngStream& stream,
                                     Matrix& out) const {
  const auto broadcaster =
      static_cast<Index>(stream.next_below(static_cast<std::uint64_t>(dim())));
  const Real gamma = p_.mixing(k);
  out.setIdentity();
  if (dynamic_) {
    const auto adj = build_adjacency(p_.topology(k));
    for (Index j : adj[static_cast<std::size_t>(broadcaster)]) {
      out(j, j) = 1.0 - gamma;
      out(j, broadcaster) = gamma;
    }
    return;
  }
  for (Index j : static_adj_[static_cast<std::size_t>(broadcaster)]) {
    out(j, j) = 1.0 - gamma;
    out(j, broadcaster) = gamma;
  }
}

Matrix BroadcastGossipModel::expected(long k) const {
  const Real gamma = p_.mixing(k);
  const auto m = static_cast<Real>(dim());
  const auto& adj = dynamic_ ? build_adjacency(p_.topology(k)) : static_adj_;
  Matrix e = Matrix::Zero(dim(), dim());
  for (Index j = 0; j < dim(); ++j) {
    const auto& nbrs = adj[static_cast<std::size_t>(j)];
    for (Index l : nbrs) {
      e(j, l) = gamma / m;
    }
    e(j, j) = 1.0 - gamma * static_cast<Real>(nbrs.size()) / m;
  }
  return e;
}

Divergence BroadcastGossipModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  if (dynamic_) {
    return Divergence::unknown;
  }
  const auto& nbrs = static_adj_[static_cast<std::size_t>(i)];
  const bool adjacent = std::binary_search(nbrs.begin(), nbrs.end(), j);
  return adjacent ? p_.mixing.divergence() : Divergence::summable;
}

std::optional<OutcomeSet> BroadcastGossipModel::outcomes(long k) const {
  const Real gamma = p_.mixing(k);
  const auto& adj = dynamic_ ? build_adjacency(p_.topology(k)) : static_adj_;
  OutcomeSet set;
  set.reserve(static_cast<std::size_t>(dim()));
  const Real prob = 1.0 / static_cast<Real>(dim());
  for (Index b = 0; b < dim(); ++b) {
    Matrix w = Matrix::Identity(dim(), dim());
    for (Index j : adj[static_cast<std::size_t>(b)]) {
      w(j, j) = 1.0 - gamma;
      w(j, b) = gamma;
    }
    set.push_back({prob, std::move(w)});
  }
  return set;
}

std::string BroadcastGossipModel::describe() const {
  return "broadcast_gossip m=" + std::to_string(dim()) +
         (dynamic_ ? " dynamic-topology" : " edges=" + std::to_string(p_.edges.size())) +
         " mixing " + p_.mixing.describe();
}

// --------------------------------------------------------------------------
// Link failures
// --------------------------------------------------------------------------

StochasticMatrix link_failure_compose(const StochasticMatrix& w, const Matrix& f) {
  const Index m = w.dim();
  if (f.rows() != m || f.cols() != m) {
    throw DimensionMismatch("failure matrix does not match the sample dimension");
  }
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      const Real v = f(i, j);
      if (v != 0.0 && v != 1.0) {
        throw NonBinaryFailureMatrix("failure matrix entry (" + std::to_string(i) +
                                     "," + std::to_string(j) + ") is " +
                                     std::to_string(v));
      }
      if (i == j && v != 0.0) {
        throw NonBinaryFailureMatrix("failure matrix must have a zero diagonal");
      }
    }
  }
  Matrix u = w.mat();
  for (Index i = 0; i < m; ++i) {
    Real diag = u(i, i);
    for (Index j = 0; j < m; ++j) {
      if (j != i && f(i, j) == 1.0) {
        diag += u(i, j);
        u(i, j) = 0.0;
      }
    }
    u(i, i) = diag;
  }
  return StochasticMatrix(std::move(u));
}

Matrix uniform_failure_sample(Real p, Index m, RngStream& stream) {
  if (!(p >= 0.0) || p > 1.0) {
    throw DegenerateSchedule("failure probability must lie in [0, 1]");
  }
  Matrix f = Matrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (i != j && stream.next_real() < p) {
        f(i, j) = 1.0;
      }
    }
  }
  return f;
}

FailureSpec FailureSpec::failure_probability(Schedule p) {
  FailureSpec s;
  s.failure = p;
  return s;
}

FailureSpec FailureSpec::survival_probability(Schedule q) {
  FailureSpec s;
  s.survival = q;
  return s;
}

LinkFailureModel::LinkFailureModel(ModelPtr base, FailureSpec spec,
                                   std::uint64_t seed_base)
    : ChainModel(ModelKind::link_failure, base ? base->dim() : 0, seed_base),
      base_(std::move(base)),
      spec_(std::move(spec)) {
  if (spec_.failure.has_value() == spec_.survival.has_value()) {
    throw Error("failure model takes exactly one of failure/survival probability");
  }
  const Schedule& s = spec_.failure ? *spec_.failure : *spec_.survival;
  if (s.upper_bound() > 1.0) {
    throw DegenerateSchedule("failure/survival probability must stay within [0, 1]");
  }
}

Real LinkFailureModel::failure_prob(long k) const {
  return spec_.failure ? (*spec_.failure)(k) : 1.0 - (*spec_.survival)(k);
}

void LinkFailureModel::do_sample(long k, std::uint64_t path, RngStream& stream,
                                 Matrix& out) const {
  base_->sample_into(k, path, out);
  const Real p = failure_prob(k);
  for (Index i = 0; i < dim(); ++i) {
    Real moved = 0.0;
    for (Index j = 0; j < dim(); ++j) {
      if (j != i && stream.next_real() < p) {
        moved += out(i, j);
        out(i, j) = 0.0;
      }
    }
    out(i, i) += moved;
  }
}

bool LinkFailureModel::has_expected() const { return base_->has_expected(); }

Matrix LinkFailureModel::expected(long k) const {
  const Real p = failure_prob(k);
  const Index m = dim();
  return p * Matrix::Identity(m, m) + (1.0 - p) * base_->expected(k);
}

Divergence LinkFailureModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  const Divergence b = base_->pair_divergence(i, j);
  // The expected pair flow is scaled by the survival probability 1 - p_k.
  if (spec_.survival) {
    const Schedule& q = *spec_.survival;
    if (q.summable()) return Divergence::summable;
    if (q.lower_limit() > 0.0) return b;
    return b == Divergence::summable ? Divergence::summable : Divergence::unknown;
  }
  const Schedule& p = *spec_.failure;
  if (p.lower_limit() >= 1.0) {
    return Divergence::summable;  // every link is down at every step
  }
  // Survival is bounded below eventually (constant p < 1, or p decays to 0),
  // so the base tag passes through unchanged.
  return b;
}

std::string LinkFailureModel::describe() const {
  const std::string rate = spec_.failure ? "failure " + spec_.failure->describe()
                                         : "survival " + spec_.survival->describe();
  return "link_failure " + rate + " over [" + base_->describe() + "]";
}

// --------------------------------------------------------------------------
// Permutations
// --------------------------------------------------------------------------

PermutationModel::PermutationModel(Index m, std::uint64_t seed_base)
    : ChainModel(ModelKind::permutation, m, seed_base) {}

void PermutationModel::do_sample(long, std::uint64_t, RngStream& stream,
                                 Matrix& out) const {
  thread_local std::vector<Index> perm;
  const auto m = static_cast<std::size_t>(dim());
  perm.resize(m);
  std::iota(perm.begin(), perm.end(), Index{0});
  for (std::size_t i = m - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(stream.next_below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  out.setZero();
  for (std::size_t i = 0; i < m; ++i) {
    out(static_cast<Index>(i), perm[i]) = 1.0;
  }
}

Matrix PermutationModel::expected(long) const {
  return Matrix::Constant(dim(), dim(), 1.0 / static_cast<Real>(dim()));
}

Divergence PermutationModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  // E[W_ij + W_ji] = 2/m at every step.
  return Divergence::divergent;
}

std::optional<Matrix> PermutationModel::expected_gram(long) const {
  // Permutation matrices are orthogonal: W^T W = I surely.
  return Matrix::Identity(dim(), dim());
}

std::optional<Matrix> PermutationModel::expected_feedback(long) const {
  // Each row has a single 1, so W_ii W_ij = 0 whenever i != j.
  return Matrix::Zero(dim(), dim());
}

std::string PermutationModel::describe() const {
  return "permutation m=" + std::to_string(dim());
}

// --------------------------------------------------------------------------
// Simplex row
// --------------------------------------------------------------------------

SimplexRowModel::SimplexRowModel(std::uint64_t seed_base)
    : ChainModel(ModelKind::simplex_row, 3, seed_base) {}

void SimplexRowModel::do_sample(long, std::uint64_t, RngStream& stream,
                                Matrix& out) const {
  out.setZero();
  out(0, 0) = 1.0;
  out(2, 2) = 1.0;
  // Uniform point on the simplex via normalized exponentials.
  const Real e0 = -std::log(stream.next_real_pos());
  const Real e1 = -std::log(stream.next_real_pos());
  const Real e2 = -std::log(stream.next_real_pos());
  const Real s = e0 + e1 + e2;
  out(1, 0) = e0 / s;
  out(1, 1) = e1 / s;
  out(1, 2) = e2 / s;
}

Matrix SimplexRowModel::expected(long) const {
  Matrix e = Matrix::Zero(3, 3);
  e(0, 0) = 1.0;
  e(2, 2) = 1.0;
  e.row(1).setConstant(1.0 / 3.0);
  return e;
}

Divergence SimplexRowModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  if (i > j) std::swap(i, j);
  // Row 2 feeds pairs {1,2} and {2,3} a constant expected flow of 1/3; the
  // flow between the two absorbing agents is identically zero.
  return (i == 0 && j == 2) ? Divergence::summable : Divergence::divergent;
}

std::optional<Matrix> SimplexRowModel::expected_gram(long) const {
  // Rows 1 and 3 contribute e_1 e_1^T and e_3 e_3^T; the middle row
  // contributes the simplex second moments E[u_i u_j] = (1 + [i==j]) / 12.
  Matrix h = Matrix::Constant(3, 3, 1.0 / 12.0);
  h.diagonal().setConstant(1.0 / 6.0);
  h(0, 0) += 1.0;
  h(2, 2) += 1.0;
  return h;
}

std::optional<Matrix> SimplexRowModel::expected_feedback(long) const {
  Matrix f = Matrix::Zero(3, 3);
  f(0, 1) = f(1, 0) = 1.0 / 12.0;  // E[u_1 u_0] through row 2
  f(1, 2) = f(2, 1) = 1.0 / 12.0;
  return f;
}

std::string SimplexRowModel::describe() const { return "simplex_row m=3"; }

// --------------------------------------------------------------------------
// Harmonic pair
// --------------------------------------------------------------------------

Matrix harmonic_pair_matrix(long k) {
  if (k < 0) {
    throw Error("chain steps are indexed from 0, got " + std::to_string(k));
  }
  const Real a = 1.0 / static_cast<Real>(k + 2);
  Matrix w(2, 2);
  w << 1.0 - a, a, a, 1.0 - a;
  return w;
}

HarmonicPairModel::HarmonicPairModel()
    : ChainModel(ModelKind::harmonic_pair, 2, 0) {}

void HarmonicPairModel::do_sample(long k, std::uint64_t, RngStream&,
                                  Matrix& out) const {
  out = harmonic_pair_matrix(k);
}

Matrix HarmonicPairModel::expected(long k) const { return harmonic_pair_matrix(k); }

Divergence HarmonicPairModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  return Divergence::divergent;  // sum 2/(k+2) is harmonic
}

std::optional<OutcomeSet> HarmonicPairModel::outcomes(long k) const {
  OutcomeSet set;
  set.push_back({1.0, harmonic_pair_matrix(k)});
  return set;
}

std::string HarmonicPairModel::describe() const { return "harmonic_pair"; }

// --------------------------------------------------------------------------
// Deterministic sequences
// --------------------------------------------------------------------------

DeterministicModel::DeterministicModel(Index m, std::function<Matrix(long)> step_fn,
                                       std::string label,
                                       std::function<Divergence(Index, Index)> tag_fn,
                                       bool is_identity)
    : ChainModel(ModelKind::deterministic_sequence, m, 0),
      fn_(std::move(step_fn)),
      label_(std::move(label)),
      tags_(std::move(tag_fn)),
      identity_(is_identity) {
  if (!fn_) {
    throw Error("deterministic model needs a step function");
  }
}

void DeterministicModel::do_sample(long k, std::uint64_t, RngStream&,
                                   Matrix& out) const {
  out = fn_(k);
  if (out.rows() != dim() || out.cols() != dim()) {
    throw DimensionMismatch("deterministic step function returned a matrix of size " +
                            std::to_string(out.rows()) + "x" +
                            std::to_string(out.cols()));
  }
}

Matrix DeterministicModel::expected(long k) const { return fn_(k); }

Divergence DeterministicModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  return tags_ ? tags_(i, j) : Divergence::unknown;
}

std::optional<OutcomeSet> DeterministicModel::outcomes(long k) const {
  OutcomeSet set;
  set.push_back({1.0, fn_(k)});
  return set;
}

std::string DeterministicModel::describe() const { return label_; }

ModelPtr make_identity_model(Index m) {
  return std::make_shared<DeterministicModel>(
      m, [m](long) { return Matrix::Identity(m, m); },
      "identity m=" + std::to_string(m),
      [](Index, Index) { return Divergence::summable; },
      /*is_identity=*/true);
}

}  // namespace stochain
