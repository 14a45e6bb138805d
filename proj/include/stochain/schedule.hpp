#pragma once

#include <string>

#include "stochain/errors.hpp"
#include "stochain/types.hpp"

namespace stochain {

// Whether an infinite series of nonnegative terms adds up to infinity. The
// `unknown` state exists for model compositions where no closed form survives
// and a finite-horizon heuristic has to decide instead.
enum class Divergence { divergent, summable, unknown };

const char* to_string(Divergence d);

// A nonnegative rate sequence in the closed family
//
//   s(k) = c * (k+1)^(-a) * r^k,   k = 0, 1, 2, ...
//
// which covers the three named forms used by the model constructors:
//   constant(c)      a = 0, r = 1
//   power(c, a)      c * (k+1)^(-a)
//   geometric(c, r)  c * r^k
// The family is closed under products, and summability of the series is
// decidable exactly: zero if c = 0, geometric decay wins if r < 1, otherwise
// it is the p-series test on a.
class Schedule {
 public:
  static Schedule constant(Real c) { return Schedule(c, 0.0, 1.0); }
  static Schedule power(Real c, Real a) { return Schedule(c, a, 1.0); }
  static Schedule geometric(Real c, Real r) { return Schedule(c, 0.0, r); }

  Real operator()(long k) const;

  // Exact summability of sum_{k>=0} s(k).
  bool summable() const;
  Divergence divergence() const {
    return summable() ? Divergence::summable : Divergence::divergent;
  }

  bool is_zero() const { return c_ == 0.0; }
  // sup over k >= 0; the family is nonincreasing so this is s(0).
  Real upper_bound() const { return c_; }
  // Positive iff s(k) stays bounded away from zero, i.e. the constant form.
  Real lower_limit() const { return (a_ == 0.0 && r_ == 1.0) ? c_ : 0.0; }

  friend Schedule operator*(const Schedule& lhs, const Schedule& rhs) {
    return Schedule(lhs.c_ * rhs.c_, lhs.a_ + rhs.a_, lhs.r_ * rhs.r_);
  }

  std::string describe() const;

 private:
  Schedule(Real c, Real a, Real r);

  Real c_;  // scale, >= 0
  Real a_;  // polynomial decay exponent, >= 0
  Real r_;  // geometric ratio, in (0, 1]
};

}  // namespace stochain
