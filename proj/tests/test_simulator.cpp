#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <vector>

#include "stochain/approximation.hpp"
#include "stochain/simulator.hpp"
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

// Two fully connected triangles with no links between them.
GossipParams two_clique_gossip() {
  GossipParams p;
  p.m = 6;
  const std::vector<std::vector<Index>> cliques = {{0, 1, 2}, {3, 4, 5}};
  for (const auto& clique : cliques) {
    for (std::size_t a = 0; a < clique.size(); ++a) {
      for (std::size_t b = a + 1; b < clique.size(); ++b) {
        p.links.push_back({clique[a], clique[b], Schedule::constant(1.0)});
      }
    }
  }
  return p;
}

// Shrink factor of the two-agent gap after steps 1..K of the harmonic pair
// chain, accumulated in extended precision.
Real harmonic_gap_oracle(long steps) {
  long double acc = 1.0L;
  for (long k = 1; k <= steps; ++k) {
    acc *= static_cast<long double>(k) / static_cast<long double>(k + 2);
  }
  return static_cast<Real>(acc);
}

}  // namespace

TEST_CASE("identity trajectories hold the initial vector") {
  auto ident = make_identity_model(3);
  Vector x0(3);
  x0 << 0.3, 0.7, 0.1;
  const TrajectoryReport rep = run_trajectory(*ident, x0, 0, 64);

  CHECK(rep.x_final == x0);
  REQUIRE(rep.checkpoint_steps.size() == rep.spread_series.size());
  REQUIRE(rep.checkpoint_steps.size() == rep.checkpoint_states.size());
  const std::vector<long> expected_steps = {0, 1, 2, 4, 8, 16, 32, 64};
  CHECK(rep.checkpoint_steps == expected_steps);
  for (Real s : rep.spread_series) CHECK(s == 0.7 - 0.1);
  for (const Vector& v : rep.checkpoint_states) CHECK(v == x0);
  CHECK(rep.window_start == 64 - 6);
  CHECK(rep.pair_gaps(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(rep.pair_gaps(1, 2) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(rep.cauchy_gaps.maxCoeff() == 0.0);
}

TEST_CASE("harmonic pair gap matches the telescoped shrink factor") {
  const HarmonicPairModel model;
  Vector x0(2);
  x0 << 1.0, 0.0;
  for (long steps : {10L, 100L, 1000L}) {
    CAPTURE(steps);
    const TrajectoryReport rep = run_trajectory(model, x0, 1, steps + 1);
    const Real gap = std::abs(rep.x_final(0) - rep.x_final(1));
    const Real oracle = harmonic_gap_oracle(steps);
    CHECK(gap == doctest::Approx(oracle).epsilon(1e-9));
    // The telescoped product has the closed form 2/((K+1)(K+2)).
    const Real closed =
        2.0 / (static_cast<Real>(steps + 1) * static_cast<Real>(steps + 2));
    CHECK(oracle == doctest::Approx(closed).epsilon(1e-12));
    // Mass is conserved: every step matrix has column sums 1.
    CHECK(rep.x_final.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.spread_series.back() == doctest::Approx(gap).epsilon(1e-15));
  }
}

TEST_CASE("two-agent gossip reaches consensus in one step") {
  GossipParams p;
  p.m = 2;
  p.links.push_back({0, 1, Schedule::constant(1.0)});
  const GossipModel model(p, 61);
  Vector x0(2);
  x0 << 0.25, 0.75;
  const TrajectoryReport rep = run_trajectory(model, x0, 0, 1, 5);
  CHECK(rep.x_final(0) == 0.5);
  CHECK(rep.x_final(1) == 0.5);
  CHECK(rep.spread_series.back() == 0.0);
}

TEST_CASE("trajectories stay inside the initial range") {
  auto base = std::make_shared<GossipModel>(complete_gossip(4), 62);
  const LinkFailureModel model(
      base, FailureSpec::failure_probability(Schedule::constant(0.3)), 63);
  Vector x0(4);
  x0 << -0.5, 2.0, 0.25, 1.0;
  for (std::uint64_t path = 0; path < 20; ++path) {
    const TrajectoryReport rep = run_trajectory(model, x0, 0, 64, path);
    for (const Vector& v : rep.checkpoint_states) {
      CHECK(v.minCoeff() >= -0.5 - 1e-15);
      CHECK(v.maxCoeff() <= 2.0 + 1e-15);
    }
    // Spread never exceeds its value at the start.
    for (Real s : rep.spread_series) CHECK(s <= rep.spread_series.front());
  }
}

TEST_CASE("consensus vectors are fixed points of every chain") {
  const Real c = 0.4375;  // exactly representable, products stay exact
  SUBCASE("gossip") {
    const GossipModel model(complete_gossip(3), 64);
    const TrajectoryReport rep =
        run_trajectory(model, Vector::Constant(3, c), 0, 128, 1);
    CHECK(rep.x_final == Vector::Constant(3, c));
    for (Real s : rep.spread_series) CHECK(s == 0.0);
  }
  SUBCASE("permutation") {
    const PermutationModel model(4, 65);
    const TrajectoryReport rep =
        run_trajectory(model, Vector::Constant(4, c), 0, 128, 1);
    CHECK(rep.x_final == Vector::Constant(4, c));
  }
  SUBCASE("simplex rows renormalize, so equality is only near-exact") {
    const SimplexRowModel model(66);
    const TrajectoryReport rep =
        run_trajectory(model, Vector::Constant(3, c), 0, 128, 1);
    CHECK((rep.x_final - Vector::Constant(3, c)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(rep.spread_series.back() < 1e-13);
  }
}

TEST_CASE("trajectories are affine-equivariant under matched realizations") {
  const GossipModel model(complete_gossip(3), 67);
  Vector x0(3);
  x0 << 0.2, 0.9, -0.4;
  const Real a = -1.5;
  const Real b = 0.25;
  const Vector y0 = a * x0 + Vector::Constant(3, b);

  const TrajectoryReport rx = run_trajectory(model, x0, 0, 256, 7);
  const TrajectoryReport ry = run_trajectory(model, y0, 0, 256, 7);
  REQUIRE(rx.checkpoint_steps == ry.checkpoint_steps);
  for (std::size_t c = 0; c < rx.checkpoint_states.size(); ++c) {
    const Vector mapped =
        a * rx.checkpoint_states[c] + Vector::Constant(3, b);
    CHECK((ry.checkpoint_states[c] - mapped).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("trajectory csv is frozen for a constant run") {
  auto ident = make_identity_model(2);
  Vector x0(2);
  x0 << 0.25, 0.75;
  const TrajectoryReport rep = run_trajectory(*ident, x0, 0, 4);
  const std::string expected =
      "step,x_1,x_2,spread\n"
      "0,0.25,0.75,0.5\n"
      "1,0.25,0.75,0.5\n"
      "2,0.25,0.75,0.5\n"
      "4,0.25,0.75,0.5\n";
  CHECK(trajectory_csv(rep) == expected);
}

TEST_CASE("trajectory csv round-trips every value bitwise") {
  const GossipModel model(complete_gossip(3), 68);
  Vector x0(3);
  x0 << 1.0, 0.0, 0.0;
  const TrajectoryReport rep = run_trajectory(model, x0, 0, 32, 2);
  std::istringstream in(trajectory_csv(rep));
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "step,x_1,x_2,x_3,spread");
  for (std::size_t c = 0; c < rep.checkpoint_steps.size(); ++c) {
    REQUIRE(std::getline(in, line));
    std::istringstream fields(line);
    std::string field;
    REQUIRE(std::getline(fields, field, ','));
    CHECK(std::stol(field) == rep.checkpoint_steps[c]);
    for (Index i = 0; i < 3; ++i) {
      REQUIRE(std::getline(fields, field, ','));
      CHECK(std::strtod(field.c_str(), nullptr) == rep.checkpoint_states[c](i));
    }
    REQUIRE(std::getline(fields, field, ','));
    CHECK(std::strtod(field.c_str(), nullptr) == rep.spread_series[c]);
  }
  CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("trajectory runs validate their inputs") {
  auto ident = make_identity_model(3);
  Vector bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(run_trajectory(*ident, bad, 0, 8), DimensionMismatch);
  const Vector x0 = Vector::Zero(3);
  CHECK_THROWS_AS(run_trajectory(*ident, x0, 4, 4), Error);
  CHECK_THROWS_AS(run_trajectory(*ident, x0, -1, 8), Error);
}

TEST_CASE("identity chain measures as all singletons") {
  auto ident = make_identity_model(4);
  const ErgodicityPattern pattern =
      empirical_ergodicity_pattern(*ident, 3, {0, 7}, 64, 1e-6, 71);
  CHECK(pattern == ErgodicityPattern::singletons(4));
}

TEST_CASE("complete gossip measures as a single class") {
  const GossipModel model(complete_gossip(3), 72);
  const EmpiricalPatternOptions options{.seed_base = 73};
  const EmpiricalPatternReport rep = empirical_pattern_report(model, options);
  CHECK(rep.pattern == ErgodicityPattern::single_block(3));
  CHECK(rep.runs == 2 * 3 * 20);
  CHECK(rep.stability_fraction == 1.0);
  CHECK(rep.coordinate_stability.minCoeff() == 1.0);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) {
      CHECK(rep.evidence(i, j) == 1.0);
    }
  }
}

TEST_CASE("decoupled cliques measure as two classes") {
  const GossipModel model(two_clique_gossip(), 74);
  EmpiricalPatternOptions options;
  options.seed_base = 75;
  const EmpiricalPatternReport rep = empirical_pattern_report(model, options);
  CHECK(rep.pattern == ErgodicityPattern({{0, 1, 2}, {3, 4, 5}}, 6));
  // Cross-clique pairs keep their initial separation in every basis run that
  // starts inside one of their cliques.
  CHECK(rep.evidence(0, 3) < 0.99);
  CHECK(rep.stability_fraction == 1.0);
}

TEST_CASE("worker count does not change the measurement") {
  const GossipModel model(two_clique_gossip(), 76);
  EmpiricalPatternOptions serial;
  serial.trials = 6;
  serial.horizon = 512;
  serial.seed_base = 77;
  EmpiricalPatternOptions threaded = serial;
  threaded.workers = 4;

  const EmpiricalPatternReport a = empirical_pattern_report(model, serial);
  const EmpiricalPatternReport b = empirical_pattern_report(model, threaded);
  CHECK(a.pattern == b.pattern);
  CHECK(a.evidence == b.evidence);
  CHECK(a.coordinate_stability == b.coordinate_stability);
  CHECK(a.stability_fraction == b.stability_fraction);
}

TEST_CASE("finitely modified chains measure identically") {
  auto harmonic = std::make_shared<HarmonicPairModel>();
  auto modified = make_prefix_identity(harmonic, 5);
  const std::vector<long> t0_set = {0, 7};
  const ErgodicityPattern original =
      empirical_ergodicity_pattern(*harmonic, 1, t0_set, 16384, 1e-6, 78);
  const ErgodicityPattern patched =
      empirical_ergodicity_pattern(*modified, 1, t0_set, 16384, 1e-6, 78);
  CHECK(original == patched);
  CHECK(original == ErgodicityPattern::single_block(2));
}

TEST_CASE("empirical measurement validates its options") {
  const GossipModel model(complete_gossip(3), 79);
  EmpiricalPatternOptions options;
  options.trials = 0;
  CHECK_THROWS_AS(empirical_pattern_report(model, options), Error);
  options = {};
  options.t0_set.clear();
  CHECK_THROWS_AS(empirical_pattern_report(model, options), Error);
  options = {};
  options.epsilon = 0.0;
  CHECK_THROWS_AS(empirical_pattern_report(model, options), Error);
  options = {};
  options.agreement = 1.5;
  CHECK_THROWS_AS(empirical_pattern_report(model, options), Error);
  options = {};
  options.t0_set = {0, 4000};
  CHECK_THROWS_AS(empirical_pattern_report(model, options), Error);
}

TEST_CASE("prediction and measurement agree for decoupled cliques") {
  const GossipModel model(two_clique_gossip(), 81);
  VerifyConfig config;
  config.empirical.seed_base = 82;
  const VerificationReport rep = verify_prediction(model, config);

  const ErgodicityPattern expected({{0, 1, 2}, {3, 4, 5}}, 6);
  CHECK(rep.predicted == expected);
  CHECK(rep.empirical == expected);
  CHECK(rep.match);
  CHECK(rep.modes_agree);
  CHECK(rep.stability_fraction >= 0.99);
  CHECK(rep.warnings.empty());
  CHECK(rep.empirical.refines(rep.predicted));
}

TEST_CASE("permutation chain trips the feedback hypothesis") {
  const PermutationModel model(3, 83);
  VerifyConfig config;
  config.empirical.seed_base = 84;
  const VerificationReport rep = verify_prediction(model, config);

  CHECK(rep.predicted == ErgodicityPattern::single_block(3));
  CHECK(rep.empirical == ErgodicityPattern::singletons(3));
  CHECK_FALSE(rep.match);
  REQUIRE_FALSE(rep.warnings.empty());
  CHECK(rep.warnings.front().message.find("gamma_weak = 0") !=
        std::string::npos);
  // Coordinates keep hopping between 0 and 1, so no run looks settled.
  CHECK(rep.stability_fraction < 0.5);
  CHECK(rep.coordinate_stability.maxCoeff() < 0.5);
  CHECK(rep.empirical.refines(rep.predicted));
}

TEST_CASE("simplex rows trip the steady-state hypothesis") {
  const SimplexRowModel model(85);
  VerifyConfig config;
  config.empirical.seed_base = 86;
  const VerificationReport rep = verify_prediction(model, config);

  CHECK(rep.predicted == ErgodicityPattern::single_block(3));
  CHECK(rep.empirical == ErgodicityPattern::singletons(3));
  CHECK_FALSE(rep.match);
  REQUIRE_FALSE(rep.warnings.empty());
  bool found = false;
  for (const HypothesisWarning& w : rep.warnings) {
    if (w.message.find("not positive") != std::string::npos) found = true;
  }
  CHECK(found);
  // The middle coordinate follows a fresh random row every step; the fixed
  // coordinates never move.
  CHECK(rep.coordinate_stability(0) == 1.0);
  CHECK(rep.coordinate_stability(1) < 0.5);
  CHECK(rep.coordinate_stability(2) == 1.0);
  CHECK(rep.empirical.refines(rep.predicted));
}
