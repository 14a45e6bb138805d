#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stochain/chain_model.hpp"
#include "stochain/flow_graph.hpp"

namespace stochain {

// Result of searching for one stochastic vector pi with pi^T E[W(k)] = pi^T
// across a step range. `pi` is absent when the stacked fixed-point system has
// no stochastic solution or the best candidate misses the residual gate.
struct SteadyStateReport {
  std::optional<Vector> pi;
  std::vector<Real> residuals;  // per examined step, l1 norm of pi^T E - pi^T
  bool positive = false;        // min_i pi_i > 0
  Real pi_min = 0.0;
};

// Stacks (E[W(k)]^T - I) over the range and extracts a stochastic null
// vector: the uniform vector is tried first (it is exact for doubly
// stochastic expectations), then an SVD nullspace with singular values below
// `sigma_threshold`. A candidate is accepted only if every per-step residual
// stays within `residual_gate`.
SteadyStateReport find_common_steady_state(const ChainModel& model,
                                           long first_step, long step_count,
                                           Real residual_gate = 1e-10,
                                           Real sigma_threshold = 1e-10);

// How the two sides of a feedback inequality are evaluated. closed_form uses
// the model's exact moments (NoClosedForm when it has none); monte_carlo
// averages over fresh sample paths and reports standard errors.
struct FeedbackEstimate {
  static FeedbackEstimate closed_form() { return {false, 0}; }
  static FeedbackEstimate monte_carlo(int samples);

  bool use_samples = false;
  int samples = 0;
};

// A (step, pair) at which the inequality family fails outright: a zero left
// side against a positive right side.
struct FeedbackWitness {
  long k;
  Index i;
  Index j;
  Real left;
  Real right;
};

// The largest coefficient gamma with  left(k,i,j) >= gamma * right(k,i,j)
// over the examined range, separately for the two inequality families:
//   weak:    E[W^T W]_ij           >= gamma (E[W_ij] + E[W_ji])
//   strong:  E[W_ii W_ij + W_jj W_ji] >= gamma (E[W_ij] + E[W_ji])
// Pairs with a zero right side are vacuous and excluded from the minimum;
// when every examined pair is vacuous, gamma is +infinity and `vacuous` is
// set. A zero left side against a positive right side pins gamma to 0 and is
// recorded as a witness.
struct FeedbackReport {
  std::optional<Real> gamma_weak;
  std::optional<Real> gamma_strong;
  bool vacuous = false;
  std::optional<FeedbackWitness> minimizer;  // where the minimum is attained
  std::vector<FeedbackWitness> witnesses;    // zero-left failures, capped
  Real max_left_se = 0.0;   // Monte Carlo standard errors; 0 in closed form
  Real max_right_se = 0.0;
};

FeedbackReport weak_feedback_coefficient(const ChainModel& model,
                                         long first_step, long step_count,
                                         FeedbackEstimate estimate);

FeedbackReport feedback_coefficient(const ChainModel& model, long first_step,
                                    long step_count, FeedbackEstimate estimate);

// Verdict for a nonnegative series observed up to a finite horizon.
enum class SeriesVerdict { bounded_looking, growing, unknown };
const char* to_string(SeriesVerdict v);

// Truncation of  sum_k sum_{i<j} H_ij(k) E[(x_i(k) - x_j(k))^2]  with
// H(k) = E[W(k)^T W(k)], the coupling-weighted disagreement series. A finite
// total certifies (on the examined range) the summability the convergence
// results need; sustained window mass is the signature of the counterexamples.
struct M2Report {
  Real partial_series = 0.0;
  std::vector<Real> window_sums;  // dyadic windows over steps since t0
  SeriesVerdict verdict = SeriesVerdict::unknown;
  int h_samples = 0;  // per-step Monte Carlo count for H; 0 when closed form
  int trials = 0;
};

// Runs `trials` independent trajectories from x0 at step t0 and accumulates
// the series over steps t0 <= k < horizon. H(k) comes from the model's
// closed-form gram matrix when it has one, otherwise from the same per-step
// samples that drive the trajectories.
M2Report m2_diagnostic(const ChainModel& model, const Vector& x0, long t0,
                       long horizon, int trials,
                       Real growth_threshold = 0.1,
                       Real bounded_fraction = 1e-3);

}  // namespace stochain
