#include "stochain/property_checks.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace stochain {

namespace {

constexpr std::size_t kWitnessCap = 16;

void check_range(long first_step, long step_count, const char* what) {
  if (first_step < 0) {
    throw Error("chain steps are indexed from 0, got " + std::to_string(first_step));
  }
  if (step_count < 1) {
    throw Error(std::string(what) + " needs at least one step");
  }
}

}  // namespace

SteadyStateReport find_common_steady_state(const ChainModel& model,
                                           long first_step, long step_count,
                                           Real residual_gate,
                                           Real sigma_threshold) {
  check_range(first_step, step_count, "steady state search");
  const Index m = model.dim();

  std::vector<Matrix> expectations;
  expectations.reserve(static_cast<std::size_t>(step_count));
  for (long s = 0; s < step_count; ++s) {
    expectations.push_back(model.expected(first_step + s));
  }

  const auto residuals_for = [&](const Vector& pi) {
    std::vector<Real> res;
    res.reserve(expectations.size());
    for (const Matrix& e : expectations) {
      res.push_back((e.transpose() * pi - pi).cwiseAbs().sum());
    }
    return res;
  };

  // Normalizes a candidate direction into a stochastic vector and accepts it
  // only when every per-step residual clears the gate.
  const auto accept = [&](Vector pi) -> std::optional<SteadyStateReport> {
    const Real sum = pi.sum();
    if (!(std::abs(sum) > 1e-8)) return std::nullopt;
    pi /= sum;
    if (pi.minCoeff() < -1e-9) return std::nullopt;
    for (Index i = 0; i < m; ++i) {
      if (pi(i) < 0.0) pi(i) = 0.0;
    }
    pi /= pi.sum();
    std::vector<Real> res = residuals_for(pi);
    for (Real r : res) {
      if (!(r <= residual_gate)) return std::nullopt;
    }
    SteadyStateReport rep;
    rep.pi_min = pi.minCoeff();
    rep.positive = rep.pi_min > 0.0;
    rep.pi = std::move(pi);
    rep.residuals = std::move(res);
    return rep;
  };

  // Uniform fast path: exact for doubly stochastic expectations and keeps pi
  // free of nullspace roundoff in the common case.
  if (auto rep = accept(Vector::Constant(m, 1.0))) return *rep;

  Matrix stacked(step_count * m, m);
  for (long s = 0; s < step_count; ++s) {
    stacked.block(s * m, 0, m, m) =
        expectations[static_cast<std::size_t>(s)].transpose() -
        Matrix::Identity(m, m);
  }
  Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  std::vector<Index> null_cols;
  for (Index c = 0; c < sigma.size(); ++c) {
    if (sigma(c) <= sigma_threshold) null_cols.push_back(c);
  }

  if (!null_cols.empty()) {
    // The projection of the uniform vector onto the null span lands on a
    // nonnegative combination whenever one exists in the common cases (it
    // averages the fixed directions); single basis vectors are the fallback.
    Vector proj = Vector::Zero(m);
    const Vector uniform = Vector::Constant(m, 1.0 / static_cast<Real>(m));
    for (Index c : null_cols) {
      const Vector v = svd.matrixV().col(c);
      proj += v.dot(uniform) * v;
    }
    if (auto rep = accept(proj)) return *rep;
    for (Index c : null_cols) {
      if (auto rep = accept(svd.matrixV().col(c))) return *rep;
    }
  }
  return SteadyStateReport{};
}

FeedbackEstimate FeedbackEstimate::monte_carlo(int samples) {
  if (samples < 2) {
    throw Error("monte carlo estimation needs at least 2 samples, got " +
                std::to_string(samples));
  }
  return {true, samples};
}

namespace {

// Shared engine for the two inequality families. `weak` selects the gram
// left side E[W^T W]_ij; otherwise the diagonal-weighted one.
FeedbackReport feedback_impl(const ChainModel& model, long first_step,
                             long step_count, FeedbackEstimate estimate,
                             bool weak) {
  check_range(first_step, step_count, "feedback check");
  const Index m = model.dim();

  FeedbackReport rep;
  Real best = std::numeric_limits<Real>::infinity();
  std::optional<FeedbackWitness> best_at;
  bool any_right = false;

  Matrix left(m, m);
  Matrix right(m, m);
  Matrix w(m, m);
  Matrix lsum(m, m), lsq(m, m), rsum(m, m), rsq(m, m);

  for (long s = 0; s < step_count; ++s) {
    const long k = first_step + s;
    if (!estimate.use_samples) {
      const std::optional<Matrix> lm =
          weak ? model.expected_gram(k) : model.expected_feedback(k);
      if (!lm) {
        throw NoClosedForm("no closed-form moments for " + model.describe());
      }
      left = *lm;
      const Matrix e = model.expected(k);
      right = e + e.transpose();
    } else {
      const int n = estimate.samples;
      lsum.setZero();
      lsq.setZero();
      rsum.setZero();
      rsq.setZero();
      for (int p = 0; p < n; ++p) {
        model.sample_into(k, static_cast<std::uint64_t>(p), w);
        for (Index i = 0; i < m; ++i) {
          for (Index j = i + 1; j < m; ++j) {
            const Real lv = weak ? w.col(i).dot(w.col(j))
                                 : w(i, i) * w(i, j) + w(j, j) * w(j, i);
            const Real rv = w(i, j) + w(j, i);
            lsum(i, j) += lv;
            lsq(i, j) += lv * lv;
            rsum(i, j) += rv;
            rsq(i, j) += rv * rv;
          }
        }
      }
      const Real dn = static_cast<Real>(n);
      for (Index i = 0; i < m; ++i) {
        for (Index j = i + 1; j < m; ++j) {
          left(i, j) = lsum(i, j) / dn;
          right(i, j) = rsum(i, j) / dn;
          const Real lvar =
              std::max(0.0, (lsq(i, j) - dn * left(i, j) * left(i, j)) / (dn - 1.0));
          const Real rvar =
              std::max(0.0, (rsq(i, j) - dn * right(i, j) * right(i, j)) / (dn - 1.0));
          rep.max_left_se = std::max(rep.max_left_se, std::sqrt(lvar / dn));
          rep.max_right_se = std::max(rep.max_right_se, std::sqrt(rvar / dn));
        }
      }
    }

    for (Index i = 0; i < m; ++i) {
      for (Index j = i + 1; j < m; ++j) {
        const Real r = right(i, j);
        if (!(r > 0.0)) continue;
        any_right = true;
        const Real l = left(i, j);
        if (l <= 0.0) {
          if (rep.witnesses.size() < kWitnessCap) {
            rep.witnesses.push_back({k, i, j, l, r});
          }
          if (best > 0.0) {
            best = 0.0;
            best_at = FeedbackWitness{k, i, j, l, r};
          }
          continue;
        }
        const Real ratio = l / r;
        if (ratio < best) {
          best = ratio;
          best_at = FeedbackWitness{k, i, j, l, r};
        }
      }
    }
  }

  rep.vacuous = !any_right;
  rep.minimizer = best_at;
  if (weak) {
    rep.gamma_weak = best;
  } else {
    rep.gamma_strong = best;
  }
  return rep;
}

}  // namespace

FeedbackReport weak_feedback_coefficient(const ChainModel& model,
                                         long first_step, long step_count,
                                         FeedbackEstimate estimate) {
  return feedback_impl(model, first_step, step_count, estimate, /*weak=*/true);
}

FeedbackReport feedback_coefficient(const ChainModel& model, long first_step,
                                    long step_count, FeedbackEstimate estimate) {
  return feedback_impl(model, first_step, step_count, estimate, /*weak=*/false);
}

const char* to_string(SeriesVerdict v) {
  switch (v) {
    case SeriesVerdict::bounded_looking:
      return "bounded_looking";
    case SeriesVerdict::growing:
      return "growing";
    case SeriesVerdict::unknown:
      return "unknown";
  }
  return "?";
}

M2Report m2_diagnostic(const ChainModel& model, const Vector& x0, long t0,
                       long horizon, int trials, Real growth_threshold,
                       Real bounded_fraction) {
  const Index m = model.dim();
  if (x0.size() != m) {
    throw DimensionMismatch("initial vector has dimension " +
                            std::to_string(x0.size()) + ", model has " +
                            std::to_string(m));
  }
  if (trials < 1) {
    throw Error("diagnostic needs at least one trial");
  }
  if (t0 < 0) {
    throw Error("chain steps are indexed from 0, got " + std::to_string(t0));
  }
  if (horizon <= t0) {
    throw Error("horizon must lie beyond the start step");
  }

  M2Report rep;
  rep.trials = trials;

  Matrix states(m, trials);
  for (int p = 0; p < trials; ++p) states.col(p) = x0;

  std::vector<Matrix> samples(static_cast<std::size_t>(trials), Matrix(m, m));
  DyadicWindows windows;
  Matrix h(m, m);
  Vector next(m);
  bool closed_form_h = true;

  for (long k = t0; k < horizon; ++k) {
    const std::optional<Matrix> gram = model.expected_gram(k);
    if (gram) {
      h = *gram;
      for (int p = 0; p < trials; ++p) {
        model.sample_into(k, static_cast<std::uint64_t>(p),
                          samples[static_cast<std::size_t>(p)]);
      }
    } else {
      // Reuse the trajectory samples as the Monte Carlo estimate of H; the
      // matrices at step k are independent of the states entering step k, so
      // the product of the two averages estimates the term without bias.
      closed_form_h = false;
      h.setZero();
      for (int p = 0; p < trials; ++p) {
        Matrix& wp = samples[static_cast<std::size_t>(p)];
        model.sample_into(k, static_cast<std::uint64_t>(p), wp);
        h.noalias() += wp.transpose() * wp;
      }
      h /= static_cast<Real>(trials);
    }

    Real contribution = 0.0;
    for (Index i = 0; i < m; ++i) {
      for (Index j = i + 1; j < m; ++j) {
        Real mean_sq_gap = 0.0;
        for (int p = 0; p < trials; ++p) {
          const Real diff = states(i, p) - states(j, p);
          mean_sq_gap += diff * diff;
        }
        mean_sq_gap /= static_cast<Real>(trials);
        contribution += h(i, j) * mean_sq_gap;
      }
    }
    rep.partial_series += contribution;
    windows.add(k - t0, contribution);

    for (int p = 0; p < trials; ++p) {
      next.noalias() = samples[static_cast<std::size_t>(p)] * states.col(p);
      states.col(p) = next;
    }
  }

  rep.window_sums = windows.sums();
  rep.h_samples = closed_form_h ? 0 : trials;

  if (rep.partial_series == 0.0) {
    rep.verdict = SeriesVerdict::bounded_looking;
    return rep;
  }
  const long span = horizon - t0;
  const int n = DyadicWindows::count_for_horizon(span);
  const auto at = [&](int t) {
    return t >= 0 && t < static_cast<int>(rep.window_sums.size())
               ? rep.window_sums[static_cast<std::size_t>(t)]
               : 0.0;
  };
  const Real last = at(n - 1);
  const Real prev = n >= 2 ? at(n - 2) : last;
  if (last > growth_threshold && prev > growth_threshold) {
    rep.verdict = SeriesVerdict::growing;
    return rep;
  }
  int final_complete = -1;
  for (int t = 0; t < n; ++t) {
    if (DyadicWindows::is_complete(t, span)) final_complete = t;
  }
  if (final_complete >= 0 &&
      at(final_complete) < bounded_fraction * rep.partial_series) {
    rep.verdict = SeriesVerdict::bounded_looking;
  } else {
    rep.verdict = SeriesVerdict::unknown;
  }
  return rep;
}

}  // namespace stochain
