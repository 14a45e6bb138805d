#include "stochain/approximation.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace stochain {

const char* to_string(DistanceVerdict v) {
  switch (v) {
    case DistanceVerdict::l1_close:
      return "l1_close";
    case DistanceVerdict::diverging:
      return "diverging";
    case DistanceVerdict::unknown:
      return "unknown";
  }
  return "?";
}

namespace {

// Same convention as classify_edges: the last two dyadic windows decide, with
// windows the horizon never reached counted as zero.
DistanceVerdict window_verdict(const std::vector<Real>& sums, long horizon,
                               Real threshold) {
  const int n = DyadicWindows::count_for_horizon(horizon);
  const auto at = [&](int t) {
    return t < static_cast<int>(sums.size()) ? sums[static_cast<std::size_t>(t)]
                                             : 0.0;
  };
  const Real last = at(n - 1);
  const Real prev = n >= 2 ? at(n - 2) : last;
  if (last > threshold && prev > threshold) return DistanceVerdict::diverging;
  if (last <= threshold && prev <= threshold) return DistanceVerdict::l1_close;
  return DistanceVerdict::unknown;
}

// Cases where the difference series is decided by construction rather than
// observation. Anything unrecognized returns nullopt and the window heuristic
// takes over.
std::optional<DistanceVerdict> one_sided_verdict(const ChainModel& a,
                                                 const ChainModel& b) {
  if (const auto* pre = dynamic_cast<const PrefixIdentityModel*>(&a)) {
    // Differs from its base at finitely many steps only.
    if (pre->base().get() == &b) return DistanceVerdict::l1_close;
    if (const auto* other = dynamic_cast<const PrefixIdentityModel*>(&b);
        other && pre->base().get() == other->base().get()) {
      return DistanceVerdict::l1_close;
    }
  }
  if (const auto* diag = dynamic_cast<const DiagonalApproxModel*>(&a);
      diag && diag->base().get() == &b) {
    // The difference lives exactly on the cross-block entries of the base.
    bool all_summable = true;
    const auto& pattern = diag->pattern();
    for (Index i = 0; i < b.dim(); ++i) {
      for (Index j = i + 1; j < b.dim(); ++j) {
        if (pattern.same_block(i, j)) continue;
        switch (b.pair_divergence(i, j)) {
          case Divergence::divergent:
            return DistanceVerdict::diverging;
          case Divergence::summable:
            break;
          case Divergence::unknown:
            all_summable = false;
            break;
        }
      }
    }
    if (all_summable) return DistanceVerdict::l1_close;
  }
  if (dynamic_cast<const HarmonicPairModel*>(&a) != nullptr) {
    // Entrywise distance from the identity chain is 4/(k+2) per step.
    if (const auto* det = dynamic_cast<const DeterministicModel*>(&b);
        det && det->is_identity_chain()) {
      return DistanceVerdict::diverging;
    }
  }
  return std::nullopt;
}

std::optional<DistanceVerdict> analytic_verdict(const ChainModel& a,
                                                const ChainModel& b) {
  if (&a == &b) return DistanceVerdict::l1_close;
  const auto* det_a = dynamic_cast<const DeterministicModel*>(&a);
  const auto* det_b = dynamic_cast<const DeterministicModel*>(&b);
  if (det_a && det_b && det_a->is_identity_chain() && det_b->is_identity_chain()) {
    return DistanceVerdict::l1_close;
  }
  if (auto v = one_sided_verdict(a, b)) return v;
  return one_sided_verdict(b, a);
}

const ModelPtr& require_base(const ModelPtr& base) {
  if (!base) {
    throw Error("chain wrapper needs a base model");
  }
  return base;
}

}  // namespace

ChainDistanceReport l1_chain_distance(const ChainModel& a, const ChainModel& b,
                                      long horizon, FlowMode mode,
                                      Real threshold, std::uint64_t path) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("chain distance needs equal dimensions, got " +
                            std::to_string(a.dim()) + " and " +
                            std::to_string(b.dim()));
  }
  if (horizon < 1) {
    throw Error("distance horizon must be positive");
  }
  const Index m = a.dim();

  ChainDistanceReport rep;
  rep.horizon = horizon;
  rep.mode = mode;
  rep.entry_sums = Matrix::Zero(m, m);

  DyadicWindows windows;
  Matrix wa(m, m);
  Matrix wb(m, m);
  for (long k = 0; k < horizon; ++k) {
    if (mode == FlowMode::sampled) {
      a.sample_into(k, path, wa);
      b.sample_into(k, path, wb);
    } else {
      wa = a.expected(k);
      wb = b.expected(k);
    }
    Real step_total = 0.0;
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) {
        const Real d = std::abs(wa(i, j) - wb(i, j));
        rep.entry_sums(i, j) += d;
        step_total += d;
      }
    }
    windows.add(k, step_total);
  }
  rep.window_sums = windows.sums();

  if (auto v = analytic_verdict(a, b)) {
    rep.verdict = *v;
    rep.provenance = EdgeProvenance::analytic;
  } else {
    rep.verdict = window_verdict(rep.window_sums, horizon, threshold);
    rep.provenance = EdgeProvenance::empirical;
  }
  return rep;
}

StochasticMatrix cut_zero_approximation(const StochasticMatrix& a,
                                        const IndexSet& s) {
  if (s.ambient_dim() != a.dim()) {
    throw DimensionMismatch("index set does not match matrix dimension");
  }
  const Index m = a.dim();
  std::vector<bool> inside(static_cast<std::size_t>(m), false);
  for (Index i : s.members()) inside[static_cast<std::size_t>(i)] = true;

  Matrix b = a.mat();
  for (Index i = 0; i < m; ++i) {
    Real diag = b(i, i);
    for (Index j = 0; j < m; ++j) {
      if (j == i) continue;
      if (inside[static_cast<std::size_t>(i)] == inside[static_cast<std::size_t>(j)]) {
        continue;
      }
      diag += b(i, j);
      b(i, j) = 0.0;
    }
    b(i, i) = diag;
  }
  return StochasticMatrix(std::move(b));
}

void diagonal_approximation_into(Matrix& w, const ErgodicityPattern& pattern) {
  const Index m = pattern.dim();
  if (w.rows() != m || w.cols() != m) {
    throw DimensionMismatch("partition does not match matrix dimension");
  }
  for (Index i = 0; i < m; ++i) {
    Real diag = w(i, i);
    for (Index j = 0; j < m; ++j) {
      if (j == i || pattern.same_block(i, j)) continue;
      diag += w(i, j);
      w(i, j) = 0.0;
    }
    w(i, i) = diag;
  }
}

StochasticMatrix diagonal_approximation(const StochasticMatrix& w,
                                        const ErgodicityPattern& pattern) {
  Matrix b = w.mat();
  diagonal_approximation_into(b, pattern);
  return StochasticMatrix(std::move(b));
}

StochasticMatrix mixing_perturbation(const StochasticMatrix& wtilde,
                                     const ErgodicityPattern& pattern,
                                     const MixingSchedule& schedule, long k) {
  const Index m = wtilde.dim();
  if (pattern.dim() != m) {
    throw DimensionMismatch("partition does not match matrix dimension");
  }
  if (!schedule.amount) {
    throw DegenerateSchedule("mixing schedule has no amount function");
  }
  if (k < 0) {
    throw Error("chain steps are indexed from 0, got " + std::to_string(k));
  }
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (!pattern.same_block(i, j) && wtilde(i, j) != 0.0) {
        throw NotBlockDiagonal("entry (" + std::to_string(i) + "," +
                               std::to_string(j) + ") crosses blocks");
      }
    }
  }
  if (k < schedule.start_step) {
    return StochasticMatrix::identity(m);
  }
  const Real d = schedule.amount(k);
  if (!(d >= 0.0 && d <= 0.5)) {
    throw DegenerateSchedule("mixing amount must lie in [0, 1/2], got " +
                             std::to_string(d));
  }

  Matrix out = Matrix::Zero(m, m);
  for (const auto& block : pattern.blocks()) {
    const Real uniform = d / static_cast<Real>(block.size());
    for (Index i : block) {
      for (Index j : block) {
        out(i, j) = (1.0 - d) * wtilde(i, j) + uniform;
      }
    }
  }
  return StochasticMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Prefix identity wrapper
// ---------------------------------------------------------------------------

PrefixIdentityModel::PrefixIdentityModel(ModelPtr base, long prefix_steps)
    // Ctor arguments evaluate in unspecified order, so every read of `base`
    // goes through the null check.
    : ChainModel(require_base(base)->kind(), require_base(base)->dim(),
                 require_base(base)->seed_base()),
      base_(std::move(base)),
      prefix_(prefix_steps) {
  if (prefix_ < 0) {
    throw Error("identity prefix length must be nonnegative, got " +
                std::to_string(prefix_));
  }
}

std::string PrefixIdentityModel::describe() const {
  return "identity_prefix n=" + std::to_string(prefix_) + " over [" +
         base_->describe() + "]";
}

Matrix PrefixIdentityModel::expected(long k) const {
  if (k >= 0 && k < prefix_) return Matrix::Identity(dim(), dim());
  return base_->expected(k);
}

Divergence PrefixIdentityModel::pair_divergence(Index i, Index j) const {
  // A finite prefix never changes whether the pair flow series adds up.
  return base_->pair_divergence(i, j);
}

std::optional<OutcomeSet> PrefixIdentityModel::outcomes(long k) const {
  if (k >= 0 && k < prefix_) {
    return OutcomeSet{{1.0, Matrix::Identity(dim(), dim())}};
  }
  return base_->outcomes(k);
}

void PrefixIdentityModel::do_sample(long k, std::uint64_t path, RngStream&,
                                    Matrix& out) const {
  if (k < prefix_) {
    out.setIdentity();
    return;
  }
  base_->sample_into(k, path, out);
}

// ---------------------------------------------------------------------------
// Diagonal approximation wrapper
// ---------------------------------------------------------------------------

DiagonalApproxModel::DiagonalApproxModel(ModelPtr base, ErgodicityPattern pattern)
    : ChainModel(require_base(base)->kind(), require_base(base)->dim(),
                 require_base(base)->seed_base()),
      base_(std::move(base)),
      pattern_(std::move(pattern)) {
  if (pattern_.dim() != dim()) {
    throw DimensionMismatch("partition does not match base model dimension");
  }
}

std::string DiagonalApproxModel::describe() const {
  return "diagonal_approx pattern=" + pattern_.describe() + " over [" +
         base_->describe() + "]";
}

Matrix DiagonalApproxModel::expected(long k) const {
  // The fold is linear in the matrix, so it commutes with the expectation.
  Matrix e = base_->expected(k);
  diagonal_approximation_into(e, pattern_);
  return e;
}

Divergence DiagonalApproxModel::pair_divergence(Index i, Index j) const {
  check_pair(i, j);
  if (!pattern_.same_block(i, j)) return Divergence::summable;
  return base_->pair_divergence(i, j);
}

std::optional<OutcomeSet> DiagonalApproxModel::outcomes(long k) const {
  auto base_outcomes = base_->outcomes(k);
  if (!base_outcomes) return std::nullopt;
  for (Outcome& o : *base_outcomes) {
    diagonal_approximation_into(o.matrix, pattern_);
  }
  return base_outcomes;
}

void DiagonalApproxModel::do_sample(long k, std::uint64_t path, RngStream&,
                                    Matrix& out) const {
  base_->sample_into(k, path, out);
  diagonal_approximation_into(out, pattern_);
}

ModelPtr make_prefix_identity(ModelPtr base, long prefix_steps) {
  return std::make_shared<PrefixIdentityModel>(std::move(base), prefix_steps);
}

ModelPtr make_diagonal_approximation(ModelPtr base, ErgodicityPattern pattern) {
  return std::make_shared<DiagonalApproxModel>(std::move(base), std::move(pattern));
}

}  // namespace stochain
