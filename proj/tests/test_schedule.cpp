#include <doctest.h>

#include "stochain/errors.hpp"
#include "stochain/schedule.hpp"

using namespace stochain;

TEST_CASE("closed forms evaluate as written") {
  auto c = Schedule::constant(0.25);
  CHECK(c(0) == 0.25);
  CHECK(c(1000) == 0.25);

  auto p = Schedule::power(1.0, 1.0);  // 1/(k+1)
  CHECK(p(0) == 1.0);
  CHECK(p(1) == 0.5);
  CHECK(p(9) == doctest::Approx(0.1).epsilon(1e-15));

  auto p2 = Schedule::power(2.0, 2.0);  // 2/(k+1)^2
  CHECK(p2(0) == 2.0);
  CHECK(p2(3) == doctest::Approx(0.125).epsilon(1e-15));

  auto g = Schedule::geometric(1.0, 0.5);  // 2^-k
  CHECK(g(0) == 1.0);
  CHECK(g(10) == doctest::Approx(1.0 / 1024.0).epsilon(1e-15));
}

TEST_CASE("summability matches the series tests") {
  CHECK(Schedule::constant(0.0).summable());
  CHECK(Schedule::constant(0.3).divergence() == Divergence::divergent);
  CHECK_FALSE(Schedule::power(1.0, 1.0).summable());   // harmonic
  CHECK(Schedule::power(1.0, 2.0).summable());
  CHECK(Schedule::power(1.0, 1.001).summable());
  CHECK(Schedule::geometric(5.0, 0.99).summable());
  CHECK_FALSE(Schedule::geometric(5.0, 1.0).summable());  // constant in disguise
}

TEST_CASE("products stay in the family and multiply pointwise") {
  auto s = Schedule::power(2.0, 1.0) * Schedule::geometric(3.0, 0.5);
  for (long k : {0L, 1L, 5L, 20L}) {
    Real expect = Schedule::power(2.0, 1.0)(k) * Schedule::geometric(3.0, 0.5)(k);
    CHECK(s(k) == doctest::Approx(expect).epsilon(1e-15));
  }
  CHECK(s.summable());  // geometric factor wins

  auto h2 = Schedule::power(1.0, 0.5) * Schedule::power(1.0, 0.5);
  CHECK_FALSE(h2.summable());  // exponents add to exactly 1
}

TEST_CASE("bounds and degenerate flags") {
  auto g = Schedule::geometric(0.7, 0.9);
  CHECK(g.upper_bound() == 0.7);
  CHECK(g.lower_limit() == 0.0);

  auto c = Schedule::constant(0.4);
  CHECK(c.lower_limit() == 0.4);
  CHECK_FALSE(c.is_zero());
  CHECK(Schedule::constant(0.0).is_zero());
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(Schedule::constant(-1.0), DegenerateSchedule);
  CHECK_THROWS_AS(Schedule::power(1.0, -0.5), DegenerateSchedule);
  CHECK_THROWS_AS(Schedule::geometric(1.0, 0.0), DegenerateSchedule);
  CHECK_THROWS_AS(Schedule::geometric(1.0, 1.5), DegenerateSchedule);
  CHECK_THROWS_AS(Schedule::constant(0.5)(-1), DegenerateSchedule);
}

TEST_CASE("describe names the closed form") {
  CHECK(Schedule::constant(0.5).describe() == "constant 0.5");
  CHECK(Schedule::power(1.0, 2.0).describe() == "power 1 2");
  CHECK(Schedule::geometric(1.0, 0.5).describe() == "geometric 1 0.5");
}
