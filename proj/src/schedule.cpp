#include "stochain/schedule.hpp"

#include <cmath>
#include <cstdio>

namespace stochain {

const char* to_string(Divergence d) {
  switch (d) {
    case Divergence::divergent: return "divergent";
    case Divergence::summable: return "summable";
    case Divergence::unknown: return "unknown";
  }
  return "unknown";
}

Schedule::Schedule(Real c, Real a, Real r) : c_(c), a_(a), r_(r) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw DegenerateSchedule("schedule scale must be finite and nonnegative");
  }
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw DegenerateSchedule("schedule decay exponent must be nonnegative");
  }
  if (!(r > 0.0) || r > 1.0) {
    throw DegenerateSchedule("schedule ratio must lie in (0, 1]");
  }
}

Real Schedule::operator()(long k) const {
  if (k < 0) {
    throw DegenerateSchedule("schedules are defined for steps k >= 0");
  }
  Real v = c_;
  if (a_ == 1.0) {
    v /= static_cast<Real>(k + 1);
  } else if (a_ == 2.0) {
    const Real d = static_cast<Real>(k + 1);
    v /= d * d;
  } else if (a_ != 0.0) {
    v *= std::pow(static_cast<Real>(k + 1), -a_);
  }
  if (r_ != 1.0) {
    v *= std::pow(r_, static_cast<Real>(k));
  }
  return v;
}

bool Schedule::summable() const {
  if (c_ == 0.0) return true;
  if (r_ < 1.0) return true;
  return a_ > 1.0;  // p-series
}

std::string Schedule::describe() const {
  char buf[96];
  if (a_ == 0.0 && r_ == 1.0) {
    std::snprintf(buf, sizeof(buf), "constant %.17g", c_);
  } else if (r_ == 1.0) {
    std::snprintf(buf, sizeof(buf), "power %.17g %.17g", c_, a_);
  } else if (a_ == 0.0) {
    std::snprintf(buf, sizeof(buf), "geometric %.17g %.17g", c_, r_);
  } else {
    std::snprintf(buf, sizeof(buf), "product %.17g %.17g %.17g", c_, a_, r_);
  }
  return buf;
}

}  // namespace stochain
