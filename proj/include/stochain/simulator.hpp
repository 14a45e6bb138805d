#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stochain/chain_model.hpp"
#include "stochain/flow_graph.hpp"
#include "stochain/pattern.hpp"
#include "stochain/types.hpp"

namespace stochain {

// ---------------------------------------------------------------------------
// Single trajectory: x(k+1) = W(k) x(k) for k = t0 .. horizon-1, with the
// chain realization selected by `path`. The run is a pure function of
// (model, x0, t0, horizon, path).
// ---------------------------------------------------------------------------

struct TrajectoryReport {
  long t0 = 0;
  long horizon = 0;
  Vector x_final;

  // States at logarithmically spaced steps: t0, then t0 + 2^t, then the
  // horizon. Keeps reports small even for horizons around 1e6.
  std::vector<long> checkpoint_steps;
  std::vector<Vector> checkpoint_states;
  std::vector<Real> spread_series;  // max_i x_i - min_j x_j per checkpoint

  // Final-window statistics, over states x(k) with k >= window_start. The
  // window is the last tenth of the run (at least the last two states).
  long window_start = 0;
  Matrix pair_gaps;    // (i,j) -> max_k |x_i(k) - x_j(k)|, zero diagonal
  Vector cauchy_gaps;  // i -> max_{k,k'} |x_i(k) - x_i(k')|
};

TrajectoryReport run_trajectory(const ChainModel& model, const Vector& x0,
                                long t0, long horizon, std::uint64_t path = 0);

// Checkpoint table as CSV: header "step,x_1,..,x_m,spread", one row per
// checkpoint, values printed with round-trip precision, LF line ends.
void write_trajectory_csv(const TrajectoryReport& report, std::ostream& out);
std::string trajectory_csv(const TrajectoryReport& report);

// ---------------------------------------------------------------------------
// Empirical ergodicity pattern. Runs trajectories from every basis vector,
// every start step in t0_set, `trials` chain realizations each, and groups
// indices whose final-window gap stays below epsilon in almost every run.
// ---------------------------------------------------------------------------

struct EmpiricalPatternOptions {
  int trials = 20;
  std::vector<long> t0_set = {0, 7};
  long horizon = 2000;
  Real epsilon = 1e-6;
  // Fraction of runs that must agree before two indices are merged.
  Real agreement = 0.99;
  // Namespaces the per-run realization paths; independent of the model seed.
  std::uint64_t seed_base = 0;
  int workers = 1;
};

struct EmpiricalPatternReport {
  ErgodicityPattern pattern;
  long runs = 0;
  // Fraction of runs with final-window gap < epsilon, per pair. Symmetric,
  // diagonal 1.
  Matrix evidence;
  // Fraction of runs in which the coordinate's final-window Cauchy gap is
  // below epsilon.
  Vector coordinate_stability;
  // Fraction of runs in which every coordinate settled.
  Real stability_fraction = 0.0;
};

EmpiricalPatternReport empirical_pattern_report(
    const ChainModel& model, const EmpiricalPatternOptions& options);

ErgodicityPattern empirical_ergodicity_pattern(const ChainModel& model,
                                               int trials,
                                               const std::vector<long>& t0_set,
                                               long horizon, Real epsilon,
                                               std::uint64_t seed_base = 0);

// ---------------------------------------------------------------------------
// Prediction versus experiment. Predicts the pattern from accumulated flows,
// measures it from trajectories, and reports whether they coincide, along
// with any reasons the prediction should not be trusted.
// ---------------------------------------------------------------------------

// Non-fatal diagnostic: a hypothesis behind the prediction failed, so the
// predicted pattern is still computed but flagged unreliable.
struct HypothesisWarning {
  std::string message;
};

struct VerifyConfig {
  EmpiricalPatternOptions empirical;
  FlowMode flow_mode = FlowMode::expected;
  long flow_horizon = 4096;
  Real flow_threshold = 0.1;
  // Steps scanned by the hypothesis checks (feedback, steady state).
  long hypothesis_steps = 8;
  // Sample count for the feedback estimate when closed forms are missing.
  int hypothesis_samples = 256;
};

struct VerificationReport {
  ErgodicityPattern predicted;
  ErgodicityPattern empirical;
  bool match = false;
  bool modes_agree = true;
  long runs = 0;
  Matrix evidence;
  Vector coordinate_stability;
  Real stability_fraction = 0.0;
  std::vector<HypothesisWarning> warnings;
};

VerificationReport verify_prediction(const ChainModel& model,
                                     const VerifyConfig& config);

}  // namespace stochain
