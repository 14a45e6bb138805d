#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "stochain/approximation.hpp"
#include "stochain/property_checks.hpp"
#include "test_util.hpp"

using namespace stochain;

namespace {

GossipParams complete_gossip(Index m) {
  GossipParams p;
  p.m = m;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      p.links.push_back({i, j, Schedule::constant(1.0)});
    }
  }
  return p;
}

ModelPtr constant_chain(Matrix w, std::string label) {
  const Index m = w.rows();
  return std::make_shared<DeterministicModel>(
      m, [w = std::move(w)](long) { return w; }, std::move(label));
}

BroadcastParams ring_broadcast(Index m, Real mixing) {
  BroadcastParams p;
  p.m = m;
  for (Index i = 0; i < m; ++i) {
    p.edges.push_back({i, (i + 1) % m});
  }
  p.mixing = Schedule::constant(mixing);
  return p;
}

// A chain with no closed forms: random rows, sampling only. Exercises the
// Monte Carlo code paths and the NoClosedForm errors.
class OpaqueModel final : public ChainModel {
 public:
  OpaqueModel(Index m, std::uint64_t seed)
      : ChainModel(ModelKind::deterministic_sequence, m, seed) {}

  std::string describe() const override { return "opaque"; }
  bool has_expected() const override { return false; }

 protected:
  void do_sample(long, std::uint64_t, RngStream& stream, Matrix& out) const override {
    out = testutil::random_stochastic(stream, dim());
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// find_common_steady_state
// ---------------------------------------------------------------------------

TEST_CASE("steady state of doubly stochastic expectations is uniform") {
  const auto check_uniform = [](const ChainModel& model) {
    const SteadyStateReport rep = find_common_steady_state(model, 0, 8);
    REQUIRE(rep.pi.has_value());
    const Index m = model.dim();
    for (Index i = 0; i < m; ++i) {
      CHECK((*rep.pi)(i) == doctest::Approx(1.0 / static_cast<Real>(m)).epsilon(1e-12));
    }
    CHECK(rep.positive);
    CHECK(rep.pi_min == doctest::Approx(1.0 / static_cast<Real>(m)).epsilon(1e-12));
    REQUIRE(rep.residuals.size() == 8);
    for (Real r : rep.residuals) CHECK(r <= 1e-10);
  };

  check_uniform(GossipModel(complete_gossip(3), 11));
  check_uniform(PermutationModel(4, 12));
  check_uniform(*make_prefix_identity(
      std::make_shared<GossipModel>(complete_gossip(3), 13), 3));
  check_uniform(LinkFailureModel(
      std::make_shared<GossipModel>(complete_gossip(3), 14),
      FailureSpec::failure_probability(Schedule::constant(0.5)), 15));
}

TEST_CASE("steady state of a symmetric two-agent chain is one half each") {
  Matrix w(2, 2);
  w << 0.75, 0.25,
       0.25, 0.75;
  const SteadyStateReport rep = find_common_steady_state(*constant_chain(w, "sym2"), 0, 1);
  REQUIRE(rep.pi.has_value());
  CHECK((*rep.pi)(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK((*rep.pi)(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.positive);
}

TEST_CASE("steady state solver recovers a non-uniform fixed vector") {
  Matrix w(2, 2);
  w << 0.9, 0.1,
       0.5, 0.5;
  // Left fixed vector solved by hand: 0.1 pi_0 = 0.5 pi_1 with pi_0 + pi_1 = 1.
  const SteadyStateReport rep = find_common_steady_state(*constant_chain(w, "skew2"), 0, 4);
  REQUIRE(rep.pi.has_value());
  CHECK((*rep.pi)(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-10));
  CHECK((*rep.pi)(1) == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
  CHECK(rep.positive);
  for (Real r : rep.residuals) CHECK(r <= 1e-10);
}

TEST_CASE("steady state of the simplex row chain is supported on the fixed agents") {
  const SimplexRowModel model(21);
  const SteadyStateReport rep = find_common_steady_state(model, 0, 6);
  REQUIRE(rep.pi.has_value());
  CHECK(std::abs((*rep.pi)(1)) <= 1e-12);
  CHECK((*rep.pi)(0) > 0.0);
  CHECK((*rep.pi)(2) > 0.0);
  CHECK((*rep.pi).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(rep.positive);
  CHECK(rep.pi_min <= 1e-12);
  for (Real r : rep.residuals) CHECK(r <= 1e-10);
}

TEST_CASE("steady state is absent when per-step fixed vectors disagree") {
  Matrix a(2, 2), b(2, 2);
  a << 0.9, 0.1,
       0.5, 0.5;
  b << 0.5, 0.5,
       0.1, 0.9;
  auto alternating = std::make_shared<DeterministicModel>(
      2, [a, b](long k) { return k % 2 == 0 ? a : b; }, "alternating");
  const SteadyStateReport rep = find_common_steady_state(*alternating, 0, 4);
  CHECK_FALSE(rep.pi.has_value());
  CHECK_FALSE(rep.positive);
  CHECK(rep.residuals.empty());
}

TEST_CASE("steady state search validates its inputs") {
  const OpaqueModel opaque(3, 31);
  CHECK_THROWS_AS(find_common_steady_state(opaque, 0, 4), NoClosedForm);
  const GossipModel gossip(complete_gossip(3), 32);
  CHECK_THROWS_AS(find_common_steady_state(gossip, 0, 0), Error);
  CHECK_THROWS_AS(find_common_steady_state(gossip, -1, 4), Error);
}

// ---------------------------------------------------------------------------
// Feedback coefficients
// ---------------------------------------------------------------------------

TEST_CASE("two-agent gossip has both coefficients exactly one half") {
  GossipParams p;
  p.m = 2;
  p.links.push_back({0, 1, Schedule::constant(1.0)});
  const GossipModel model(p, 41);

  const FeedbackReport weak =
      weak_feedback_coefficient(model, 0, 4, FeedbackEstimate::closed_form());
  REQUIRE(weak.gamma_weak.has_value());
  CHECK(*weak.gamma_weak == 0.5);
  CHECK_FALSE(weak.vacuous);
  CHECK(weak.witnesses.empty());
  CHECK(weak.max_left_se == 0.0);
  REQUIRE(weak.minimizer.has_value());
  CHECK(weak.minimizer->left == 0.5);
  CHECK(weak.minimizer->right == 1.0);

  const FeedbackReport strong =
      feedback_coefficient(model, 0, 4, FeedbackEstimate::closed_form());
  REQUIRE(strong.gamma_strong.has_value());
  CHECK(*strong.gamma_strong == 0.5);
  CHECK_FALSE(strong.gamma_weak.has_value());

  // The single-outcome chain gives the Monte Carlo estimator zero variance.
  const FeedbackReport mc =
      weak_feedback_coefficient(model, 0, 4, FeedbackEstimate::monte_carlo(64));
  CHECK(*mc.gamma_weak == 0.5);
  CHECK(mc.max_left_se == 0.0);
  CHECK(mc.max_right_se == 0.0);
}

TEST_CASE("permutation chain fails both feedback families with witnesses") {
  const PermutationModel model(4, 42);

  const FeedbackReport weak =
      weak_feedback_coefficient(model, 0, 3, FeedbackEstimate::closed_form());
  CHECK(*weak.gamma_weak == 0.0);
  CHECK_FALSE(weak.vacuous);
  REQUIRE_FALSE(weak.witnesses.empty());
  CHECK(weak.witnesses[0].left == 0.0);
  CHECK(weak.witnesses[0].right == doctest::Approx(0.5).epsilon(1e-12));
  REQUIRE(weak.minimizer.has_value());
  CHECK(weak.minimizer->left == 0.0);

  const FeedbackReport strong =
      feedback_coefficient(model, 0, 3, FeedbackEstimate::closed_form());
  CHECK(*strong.gamma_strong == 0.0);
  REQUIRE_FALSE(strong.witnesses.empty());

  // Sampled estimates hit the same exact zeros: every permutation sample has
  // disjoint row supports.
  const FeedbackReport mc =
      weak_feedback_coefficient(model, 0, 3, FeedbackEstimate::monte_carlo(128));
  CHECK(*mc.gamma_weak == 0.0);
  REQUIRE_FALSE(mc.witnesses.empty());
}

TEST_CASE("identity chain makes every feedback inequality vacuous") {
  auto ident = make_identity_model(3);
  const FeedbackReport weak =
      weak_feedback_coefficient(*ident, 0, 5, FeedbackEstimate::closed_form());
  CHECK(weak.vacuous);
  CHECK(std::isinf(*weak.gamma_weak));
  CHECK_FALSE(weak.minimizer.has_value());
  CHECK(weak.witnesses.empty());

  const FeedbackReport strong =
      feedback_coefficient(*ident, 0, 5, FeedbackEstimate::monte_carlo(8));
  CHECK(strong.vacuous);
  CHECK(std::isinf(*strong.gamma_strong));
}

TEST_CASE("simplex row coefficients are one quarter with a vacuous outer pair") {
  const SimplexRowModel model(43);
  const FeedbackReport weak =
      weak_feedback_coefficient(model, 0, 2, FeedbackEstimate::closed_form());
  CHECK(*weak.gamma_weak == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_FALSE(weak.vacuous);
  const FeedbackReport strong =
      feedback_coefficient(model, 0, 2, FeedbackEstimate::closed_form());
  CHECK(*strong.gamma_strong == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("broadcast ring coefficients equal one minus the mixing amount") {
  const BroadcastGossipModel model(ring_broadcast(5, 0.3), 44);
  const FeedbackReport weak =
      weak_feedback_coefficient(model, 0, 3, FeedbackEstimate::closed_form());
  CHECK(*weak.gamma_weak == doctest::Approx(0.7).epsilon(1e-12));
  const FeedbackReport strong =
      feedback_coefficient(model, 0, 3, FeedbackEstimate::closed_form());
  CHECK(*strong.gamma_strong == doctest::Approx(0.7).epsilon(1e-12));

  // Diagonal entries stay at least 1 - mixing almost surely, and the
  // coefficient honors that floor (here with equality).
  CHECK(*weak.gamma_weak >= 0.7 - 1e-12);
}

TEST_CASE("gossip coefficients respect the activation lower bound") {
  const GossipModel model(complete_gossip(3), 45);
  const FeedbackReport weak =
      weak_feedback_coefficient(model, 0, 6, FeedbackEstimate::closed_form());
  const FeedbackReport strong =
      feedback_coefficient(model, 0, 6, FeedbackEstimate::closed_form());
  CHECK(*weak.gamma_weak == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(*strong.gamma_strong == doctest::Approx(0.5).epsilon(1e-12));

  // Half of the smallest activation probability divided by the dimension is
  // a guaranteed floor for the weak coefficient on gossip chains.
  const Real floor = 0.5 * (1.0 / 3.0) * (1.0 / 3.0);
  CHECK(*weak.gamma_weak >= floor);
  // The diagonal-weighted family never beats the gram family.
  CHECK(*strong.gamma_strong <= *weak.gamma_weak + 1e-12);
}

TEST_CASE("harmonic pair coefficients come from the first examined step") {
  const HarmonicPairModel model;
  const FeedbackReport weak =
      weak_feedback_coefficient(model, 0, 8, FeedbackEstimate::closed_form());
  // Per step the ratio is 1 - 1/(k+2), smallest at k = 0.
  CHECK(*weak.gamma_weak == doctest::Approx(0.5).epsilon(1e-12));
  REQUIRE(weak.minimizer.has_value());
  CHECK(weak.minimizer->k == 0);
}

TEST_CASE("monte carlo feedback estimates converge on the closed form") {
  const SimplexRowModel model(46);
  const FeedbackReport coarse =
      weak_feedback_coefficient(model, 0, 2, FeedbackEstimate::monte_carlo(500));
  const FeedbackReport fine =
      weak_feedback_coefficient(model, 0, 2, FeedbackEstimate::monte_carlo(2000));

  CHECK(*coarse.gamma_weak == doctest::Approx(0.25).epsilon(0.2));
  CHECK(*fine.gamma_weak == doctest::Approx(0.25).epsilon(0.1));
  CHECK(coarse.max_left_se > 0.0);
  CHECK(fine.max_left_se < coarse.max_left_se);
  // Quadrupling the sample count should halve the standard error.
  const Real shrink = coarse.max_left_se / fine.max_left_se;
  CHECK(shrink > 1.4);
  CHECK(shrink < 2.9);
}

TEST_CASE("feedback estimation validates its inputs") {
  const OpaqueModel opaque(3, 47);
  CHECK_THROWS_AS(
      weak_feedback_coefficient(opaque, 0, 2, FeedbackEstimate::closed_form()),
      NoClosedForm);
  // Sampling still works without closed forms.
  const FeedbackReport mc =
      weak_feedback_coefficient(opaque, 0, 2, FeedbackEstimate::monte_carlo(64));
  CHECK(*mc.gamma_weak > 0.0);
  CHECK(mc.max_left_se > 0.0);

  CHECK_THROWS_AS(FeedbackEstimate::monte_carlo(1), Error);
  const GossipModel gossip(complete_gossip(3), 48);
  CHECK_THROWS_AS(
      weak_feedback_coefficient(gossip, 0, 0, FeedbackEstimate::closed_form()),
      Error);
}

// ---------------------------------------------------------------------------
// m2_diagnostic
// ---------------------------------------------------------------------------

TEST_CASE("identity chain produces an identically zero series") {
  auto ident = make_identity_model(3);
  Vector x0(3);
  x0 << 0.0, 0.5, 1.0;
  const M2Report rep = m2_diagnostic(*ident, x0, 0, 128, 4);
  CHECK(rep.partial_series == 0.0);
  CHECK(rep.verdict == SeriesVerdict::bounded_looking);
  CHECK(rep.h_samples == 0);
  for (Real w : rep.window_sums) CHECK(w == 0.0);
}

TEST_CASE("consensus initial vectors produce an identically zero series") {
  const GossipModel model(complete_gossip(3), 51);
  const Vector x0 = Vector::Constant(3, 0.7);
  const M2Report rep = m2_diagnostic(model, x0, 0, 128, 8);
  CHECK(rep.partial_series == 0.0);
  CHECK(rep.verdict == SeriesVerdict::bounded_looking);
}

TEST_CASE("two-agent gossip series is one half from a basis start") {
  GossipParams p;
  p.m = 2;
  p.links.push_back({0, 1, Schedule::constant(1.0)});
  const GossipModel model(p, 52);
  Vector x0(2);
  x0 << 1.0, 0.0;
  const M2Report rep = m2_diagnostic(model, x0, 0, 64, 3);
  CHECK(rep.partial_series == 0.5);
  REQUIRE_FALSE(rep.window_sums.empty());
  CHECK(rep.window_sums[0] == 0.5);
  for (std::size_t t = 1; t < rep.window_sums.size(); ++t) {
    CHECK(rep.window_sums[t] == 0.0);
  }
  CHECK(rep.verdict == SeriesVerdict::bounded_looking);
}

TEST_CASE("harmonic pair series is bounded") {
  const HarmonicPairModel model;
  Vector x0(2);
  x0 << 1.0, 0.0;
  const M2Report rep = m2_diagnostic(model, x0, 1, 257, 1);
  CHECK(rep.partial_series > 0.0);
  CHECK(rep.partial_series < 1.0);
  CHECK(rep.verdict == SeriesVerdict::bounded_looking);
  CHECK(rep.h_samples == 0);
}

TEST_CASE("simplex row series grows without bound") {
  const SimplexRowModel model(53);
  Vector x0(3);
  x0 << 0.0, 0.5, 1.0;
  const M2Report rep = m2_diagnostic(model, x0, 0, 512, 200);
  CHECK(rep.verdict == SeriesVerdict::growing);
  CHECK(rep.partial_series > 5.0);
}

TEST_CASE("an isolated late bump reads as unknown") {
  auto bump = std::make_shared<DeterministicModel>(2, [](long k) {
    if (k == 200) {
      Matrix w(2, 2);
      w << 0.5, 0.5, 0.5, 0.5;
      return w;
    }
    return Matrix(Matrix::Identity(2, 2));
  }, "late bump");
  Vector x0(2);
  x0 << 1.0, 0.0;
  const M2Report rep = m2_diagnostic(*bump, x0, 0, 256, 1);
  CHECK(rep.partial_series == 0.5);
  CHECK(rep.verdict == SeriesVerdict::unknown);
}

TEST_CASE("link failures force the sampled H estimate") {
  auto base = std::make_shared<GossipModel>(complete_gossip(3), 54);
  const LinkFailureModel model(
      base, FailureSpec::failure_probability(Schedule::constant(0.5)), 55);
  Vector x0(3);
  x0 << 1.0, 0.0, 0.0;
  const M2Report rep = m2_diagnostic(model, x0, 0, 64, 50);
  CHECK(rep.h_samples == 50);
  CHECK(rep.partial_series > 0.0);
  CHECK(rep.verdict == SeriesVerdict::bounded_looking);
}

TEST_CASE("the m2 diagnostic validates its inputs") {
  const GossipModel model(complete_gossip(3), 56);
  Vector bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(m2_diagnostic(model, bad, 0, 8, 2), DimensionMismatch);
  const Vector x0 = Vector::Zero(3);
  CHECK_THROWS_AS(m2_diagnostic(model, x0, 0, 8, 0), Error);
  CHECK_THROWS_AS(m2_diagnostic(model, x0, 8, 8, 2), Error);
  CHECK_THROWS_AS(m2_diagnostic(model, x0, -1, 8, 2), Error);
}
