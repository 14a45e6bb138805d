#include "stochain/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include "stochain/errors.hpp"
#include "stochain/property_checks.hpp"
#include "stochain/rng.hpp"

namespace stochain {

namespace {

// Union-find over agent indices; produces the transitive closure of the
// measured pairwise relation.
class DisjointSets {
 public:
  explicit DisjointSets(Index m) : parent_(static_cast<std::size_t>(m)) {
    for (std::size_t i = 0; i < parent_.size(); ++i) parent_[i] = i;
  }

  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  void merge(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

  ErgodicityPattern pattern(Index m) {
    std::vector<std::vector<Index>> buckets(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
      buckets[find(static_cast<std::size_t>(i))].push_back(i);
    }
    std::vector<std::vector<Index>> blocks;
    for (auto& b : buckets) {
      if (!b.empty()) blocks.push_back(std::move(b));
    }
    return ErgodicityPattern(std::move(blocks), m);
  }

 private:
  std::vector<std::size_t> parent_;
};

void print_value(std::ostream& out, Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

std::string pair_label(Index i, Index j) {
  return "{" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "}";
}

}  // namespace

TrajectoryReport run_trajectory(const ChainModel& model, const Vector& x0,
                                long t0, long horizon, std::uint64_t path) {
  const Index m = model.dim();
  if (x0.size() != m) {
    throw DimensionMismatch("initial vector has size " +
                            std::to_string(x0.size()) + ", chain has " +
                            std::to_string(m) + " agents");
  }
  if (t0 < 0) {
    throw Error("chain steps are indexed from 0");
  }
  if (horizon <= t0) {
    throw Error("horizon must lie beyond the start step");
  }

  TrajectoryReport rep;
  rep.t0 = t0;
  rep.horizon = horizon;
  const long span = horizon - t0;
  rep.window_start = horizon - std::max<long>(1, span / 10);

  rep.pair_gaps = Matrix::Zero(m, m);
  const Real inf = std::numeric_limits<Real>::infinity();
  Vector lo = Vector::Constant(m, inf);
  Vector hi = Vector::Constant(m, -inf);

  Vector x = x0;
  Vector next(m);
  Matrix w(m, m);

  const auto note = [&](long step) {
    if (step >= rep.window_start) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
      for (Index i = 0; i < m; ++i) {
        for (Index j = i + 1; j < m; ++j) {
          const Real g = std::abs(x(i) - x(j));
          if (g > rep.pair_gaps(i, j)) {
            rep.pair_gaps(i, j) = g;
            rep.pair_gaps(j, i) = g;
          }
        }
      }
    }
    const long d = step - t0;
    const bool power_of_two = d > 0 && (d & (d - 1)) == 0;
    if (d == 0 || power_of_two || step == horizon) {
      rep.checkpoint_steps.push_back(step);
      rep.checkpoint_states.push_back(x);
      rep.spread_series.push_back(x.maxCoeff() - x.minCoeff());
    }
  };

  note(t0);
  for (long k = t0; k < horizon; ++k) {
    model.sample_into(k, path, w);
    next.noalias() = w * x;
    x.swap(next);
    note(k + 1);
  }

  rep.x_final = std::move(x);
  rep.cauchy_gaps = hi - lo;
  return rep;
}

void write_trajectory_csv(const TrajectoryReport& report, std::ostream& out) {
  const Index m = report.x_final.size();
  out << "step";
  for (Index i = 0; i < m; ++i) out << ",x_" << (i + 1);
  out << ",spread\n";
  for (std::size_t c = 0; c < report.checkpoint_steps.size(); ++c) {
    out << report.checkpoint_steps[c];
    for (Index i = 0; i < m; ++i) {
      out << ',';
      print_value(out, report.checkpoint_states[c](i));
    }
    out << ',';
    print_value(out, report.spread_series[c]);
    out << '\n';
  }
}

std::string trajectory_csv(const TrajectoryReport& report) {
  std::ostringstream out;
  write_trajectory_csv(report, out);
  return out.str();
}

EmpiricalPatternReport empirical_pattern_report(
    const ChainModel& model, const EmpiricalPatternOptions& options) {
  const Index m = model.dim();
  if (options.trials < 1) {
    throw Error("at least one trial per start is required");
  }
  if (options.t0_set.empty()) {
    throw Error("t0_set must contain at least one start step");
  }
  if (!(options.epsilon > 0.0)) {
    throw Error("epsilon must be positive");
  }
  if (!(options.agreement > 0.0) || options.agreement > 1.0) {
    throw Error("agreement must lie in (0, 1]");
  }
  for (long t0 : options.t0_set) {
    if (t0 < 0 || t0 >= options.horizon) {
      throw Error("start step " + std::to_string(t0) +
                  " must lie in [0, horizon)");
    }
  }

  const long trials = options.trials;
  const long runs = static_cast<long>(options.t0_set.size()) * m * trials;

  struct RunResult {
    Matrix gaps;
    Vector cauchy;
  };
  std::vector<RunResult> results(static_cast<std::size_t>(runs));

  const auto run_one = [&](long r) {
    const long trial = r % trials;
    const Index ell = static_cast<Index>((r / trials) % m);
    const long t0 = options.t0_set[static_cast<std::size_t>(r / (trials * m))];
    const std::uint64_t path = derive_seed(
        {options.seed_base, static_cast<std::uint64_t>(t0),
         static_cast<std::uint64_t>(ell), static_cast<std::uint64_t>(trial)});
    TrajectoryReport t =
        run_trajectory(model, Vector::Unit(m, ell), t0, options.horizon, path);
    results[static_cast<std::size_t>(r)] = {std::move(t.pair_gaps),
                                            std::move(t.cauchy_gaps)};
  };

  const int workers =
      static_cast<int>(std::clamp<long>(options.workers, 1, runs));
  if (workers == 1) {
    for (long r = 0; r < runs; ++r) run_one(r);
  } else {
    std::mutex fail_mutex;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (long r = w; r < runs; r += workers) run_one(r);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(fail_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Reduce in run order; counts are integers, so the totals do not depend on
  // the worker layout.
  Matrix below = Matrix::Zero(m, m);
  Vector coord = Vector::Zero(m);
  long stable_runs = 0;
  for (const RunResult& r : results) {
    for (Index i = 0; i < m; ++i) {
      for (Index j = i + 1; j < m; ++j) {
        if (r.gaps(i, j) < options.epsilon) below(i, j) += 1.0;
      }
    }
    bool all = true;
    for (Index i = 0; i < m; ++i) {
      if (r.cauchy(i) < options.epsilon) {
        coord(i) += 1.0;
      } else {
        all = false;
      }
    }
    if (all) ++stable_runs;
  }

  const Real total = static_cast<Real>(runs);
  Matrix evidence = Matrix::Identity(m, m);
  DisjointSets sets(m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const Real frac = below(i, j) / total;
      evidence(i, j) = frac;
      evidence(j, i) = frac;
      if (frac >= options.agreement) {
        sets.merge(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }

  return EmpiricalPatternReport{sets.pattern(m),
                                runs,
                                std::move(evidence),
                                coord / total,
                                static_cast<Real>(stable_runs) / total};
}

ErgodicityPattern empirical_ergodicity_pattern(const ChainModel& model,
                                               int trials,
                                               const std::vector<long>& t0_set,
                                               long horizon, Real epsilon,
                                               std::uint64_t seed_base) {
  EmpiricalPatternOptions options;
  options.trials = trials;
  options.t0_set = t0_set;
  options.horizon = horizon;
  options.epsilon = epsilon;
  options.seed_base = seed_base;
  return empirical_pattern_report(model, options).pattern;
}

VerificationReport verify_prediction(const ChainModel& model,
                                     const VerifyConfig& config) {
  std::optional<PatternPrediction> prediction;
  try {
    prediction = predict_ergodicity_pattern(model, config.flow_mode,
                                            config.flow_horizon,
                                            config.flow_threshold);
  } catch (const NoClosedForm&) {
    if (config.flow_mode == FlowMode::sampled) throw;
    prediction = predict_ergodicity_pattern(model, FlowMode::sampled,
                                            config.flow_horizon,
                                            config.flow_threshold);
  }

  std::vector<HypothesisWarning> warnings;

  FeedbackReport feedback = [&] {
    try {
      return weak_feedback_coefficient(model, 0, config.hypothesis_steps,
                                       FeedbackEstimate::closed_form());
    } catch (const NoClosedForm&) {
      return weak_feedback_coefficient(
          model, 0, config.hypothesis_steps,
          FeedbackEstimate::monte_carlo(config.hypothesis_samples));
    }
  }();
  if (!feedback.vacuous && feedback.gamma_weak && *feedback.gamma_weak == 0.0) {
    std::string msg = "gamma_weak = 0";
    if (feedback.minimizer) {
      msg += ": pair " +
             pair_label(feedback.minimizer->i, feedback.minimizer->j) +
             " exchanges mass at step " + std::to_string(feedback.minimizer->k) +
             " with no matching feedback";
    }
    warnings.push_back({std::move(msg)});
  }

  try {
    const SteadyStateReport steady =
        find_common_steady_state(model, 0, config.hypothesis_steps);
    if (!steady.pi) {
      warnings.push_back(
          {"no common steady state across the examined expected chains"});
    } else if (!steady.positive) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", steady.pi_min);
      warnings.push_back(
          {"common steady state is not positive (smallest entry " +
           std::string(buf) + ")"});
    }
  } catch (const NoClosedForm&) {
    warnings.push_back(
        {"no closed-form expectations; steady-state hypothesis unchecked"});
  }

  EmpiricalPatternReport empirical =
      empirical_pattern_report(model, config.empirical);

  const bool match = prediction->pattern == empirical.pattern;
  return VerificationReport{std::move(prediction->pattern),
                            std::move(empirical.pattern),
                            match,
                            prediction->modes_agree,
                            empirical.runs,
                            std::move(empirical.evidence),
                            std::move(empirical.coordinate_stability),
                            empirical.stability_fraction,
                            std::move(warnings)};
}

}  // namespace stochain
