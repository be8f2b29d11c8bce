#include <doctest.h>

#include "mwfair/lp.hpp"

using namespace mwfair::lp;

TEST_CASE("two-variable maximization") {
  // max x + y  s.t.  x + 2y <= 4, 3x + y <= 6: vertex (8/5, 6/5).
  Problem p(2);
  p.set_objective({1, 1}, true);
  p.add_row({1, 2}, Sense::less_equal, 4);
  p.add_row({3, 1}, Sense::less_equal, 6);
  const auto r = p.solve();
  REQUIRE(r.optimal());
  CHECK(r.x[0] == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(r.x[1] == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(r.objective == doctest::Approx(2.8).epsilon(1e-12));
}

TEST_CASE("equality and greater-equal rows need phase one") {
  // min 2x + 3y  s.t.  x + y = 1, x >= 0.25: optimum x = 1, y = 0.
  Problem p(2);
  p.set_objective({2, 3}, false);
  p.add_row({1, 1}, Sense::equal, 1);
  p.add_row({1, 0}, Sense::greater_equal, 0.25);
  const auto r = p.solve();
  REQUIRE(r.optimal());
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.x[1] == doctest::Approx(0.0));
  CHECK(r.objective == doctest::Approx(2.0));
}

TEST_CASE("infeasible and unbounded programs are reported") {
  Problem inf(1);
  inf.set_objective({1}, true);
  inf.add_row({1}, Sense::less_equal, 1);
  inf.add_row({1}, Sense::greater_equal, 2);
  CHECK(inf.solve().status == Status::infeasible);

  Problem unb(2);
  unb.set_objective({1, 0}, true);
  unb.add_row({1, -1}, Sense::less_equal, 1);
  CHECK(unb.solve().status == Status::unbounded);
}

TEST_CASE("free variables take negative values") {
  // max t  s.t.  t <= 1 - 3 = -2 via t + 3 <= 1.
  Problem p(1);
  p.set_free(0);
  p.set_objective({1}, true);
  p.add_row({1}, Sense::less_equal, -2);
  const auto r = p.solve();
  REQUIRE(r.optimal());
  CHECK(r.x[0] == doctest::Approx(-2.0));
}

TEST_CASE("negative right-hand sides are normalized") {
  // min x  s.t.  -x <= -3  (x >= 3).
  Problem p(1);
  p.set_objective({1}, false);
  p.add_row({-1}, Sense::less_equal, -3);
  const auto r = p.solve();
  REQUIRE(r.optimal());
  CHECK(r.x[0] == doctest::Approx(3.0));
}

TEST_CASE("Beale's cycling example terminates under Bland's rule") {
  // Classic degenerate LP that cycles under the largest-coefficient rule.
  // min -3/4 x4 + 20 x5 - 1/2 x6 + 6 x7; optimum -5/4 at x4 = 1, x6 = 1 (both rows then hold).
  Problem p(4);
  p.set_objective({-0.75, 20, -0.5, 6}, false);
  p.add_row({0.25, -8, -1, 9}, Sense::less_equal, 0);
  p.add_row({0.5, -12, -0.5, 3}, Sense::less_equal, 0);
  p.add_row({0, 0, 1, 0}, Sense::less_equal, 1);
  const auto r = p.solve();
  REQUIRE(r.optimal());
  CHECK(r.objective == doctest::Approx(-1.25));
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.x[2] == doctest::Approx(1.0));
}

TEST_CASE("redundant equality rows") {
  Problem p(2);
  p.set_objective({1, 2}, false);
  p.add_row({1, 1}, Sense::equal, 1);
  p.add_row({2, 2}, Sense::equal, 2);
  const auto r = p.solve();
  REQUIRE(r.optimal());
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.objective == doctest::Approx(1.0));
}
