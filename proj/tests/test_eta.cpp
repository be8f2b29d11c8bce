#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "mwfair/eta.hpp"
#include "mwfair/geometry.hpp"
#include "support.hpp"

using namespace mwfair;
using namespace mwfair::eta;

namespace {

const ServiceSet kTwo = ServiceSet::from_rows({{4, 0}, {3, 1}});
const ServiceSet kCube = ServiceSet::from_rows({{5, 0, 0}, {0, 5, 0}, {0, 0, 5}});
const ServiceSet kNoBoundary = ServiceSet::from_rows({{1, 0, 1}, {0, 1, 1}, {0.75, 0.75, 2}});
const LoadVector kNoBoundaryLoad({13.0 / 8.0, 13.0 / 8.0, 2.5});

void check_vec(const Vec& got, const Vec& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

struct Instance {
  ServiceSet services;
  LoadVector rho;
  WeightMatrix d;
};

Instance random_overloaded(testing::Engine& g, std::size_t max_n, std::size_t max_q) {
  for (;;) {
    const auto dim = static_cast<std::size_t>(testing::uniform_int(g, 2, static_cast<int>(max_q)));
    const auto n = static_cast<std::size_t>(testing::uniform_int(g, 2, static_cast<int>(max_n)));
    auto s = testing::random_services(g, n, dim);
    LoadVector rho(testing::random_positive(g, dim, 0.5, 6.0));
    if (geometry::is_stabilizable(rho, s)) continue;
    return {std::move(s), std::move(rho), WeightMatrix(testing::random_positive(g, dim, 0.2, 5.0))};
  }
}

// Largest component of (rho - A alpha)^+ minimized over a 2-vector lattice.
double grid_maxmin(const Vec& rho, const ServiceSet& s, int res) {
  double best = INFINITY;
  for (int i = 0; i <= res; ++i)
    for (int j = 0; i + j <= res; ++j) {
      const Vec a{static_cast<double>(i) / res, static_cast<double>(j) / res};
      const Vec e = positive_part(residual_load(rho, s, a));
      best = std::min(best, *std::max_element(e.begin(), e.end()));
    }
  return best;
}

}  // namespace

TEST_CASE("solve_eta closed-form examples") {
  const auto a = solve_eta(LoadVector({4, 1}), kTwo, WeightMatrix({1, 2}));
  check_vec(a.eta, {2.0 / 3.0, 1.0 / 3.0}, 1e-9);
  check_vec(a.alpha.values(), {1.0 / 3.0, 2.0 / 3.0}, 1e-9);
  CHECK_FALSE(a.stable);
  CHECK(a.objective == doctest::Approx(2.0 / 3.0 * 2.0 / 3.0 + 2.0 / 9.0));

  const auto b = solve_eta(LoadVector({3, 2, 1}), kCube, WeightMatrix({2, 3, 6}));
  check_vec(b.eta, {0.5, 1.0 / 3.0, 1.0 / 6.0}, 1e-9);
  check_vec(b.alpha.values(), {0.5, 1.0 / 3.0, 1.0 / 6.0}, 1e-9);

  const auto c = solve_eta(LoadVector({1, 1}), ServiceSet::from_rows({{2, 1}, {1, 1.5}}), WeightMatrix({1, 1}));
  CHECK(c.stable);
  check_vec(c.eta, {0, 0}, 0.0);
  CHECK(c.alpha.sum() <= 1.0 + 1e-12);

  const auto d = solve_eta(LoadVector({4, 1}), ServiceSet::from_rows({{3, 1}}), WeightMatrix({7, 0.5}));
  check_vec(d.eta, {1, 0}, 1e-12);
}

TEST_CASE("solve_eta on the boundary-free instance") {
  const auto s = solve_eta(kNoBoundaryLoad, kNoBoundary, WeightMatrix::identity(3));
  // Hand check: alpha = e_3 leaves (7/8, 7/8, 1/2) and S_3 scores highest on it.
  check_vec(s.eta, {0.875, 0.875, 0.5}, 1e-9);
  CHECK(verify_fixed_point(s, kNoBoundaryLoad, kNoBoundary, WeightMatrix::identity(3)).ok);
}

TEST_CASE("verify_fixed_point examples") {
  const LoadVector rho({4, 1});
  const WeightMatrix d({1, 2});
  const auto good = verify_fixed_point(Vec{2.0 / 3.0, 1.0 / 3.0}, Vec{1.0 / 3.0, 2.0 / 3.0}, rho, kTwo, d);
  CHECK(good.ok);
  CHECK(good.identity_residual <= 1e-12);

  const auto bad = verify_fixed_point(Vec{1, 0}, Vec{1, 0}, rho, kTwo, d);
  CHECK_FALSE(bad.ok);
  CHECK(bad.shape_residual > 0.1);  // (rho - S_1)^+ = (0, 1)

  // eta = 0 with a dominating sub-convex mixture; the unit-sum requirement is waived.
  const LoadVector stable({1.5, 1.0});
  const auto zero = verify_fixed_point(Vec{0, 0}, Vec{0.5, 0.5}, stable, ServiceSet::from_rows({{2, 1}, {1, 1.5}}),
                                       WeightMatrix({1, 1}));
  CHECK(zero.ok);
  CHECK(zero.simplex_waived);
  CHECK(zero.shape_residual == 0.0);
  CHECK(zero.identity_residual == 0.0);

  CHECK_FALSE(verify_fixed_point(Vec{1, 0, 0}, Vec{1, 0}, rho, kTwo, d).ok);
}

TEST_CASE("eta_oracle examples") {
  const auto a = eta_oracle(LoadVector({4, 1}), kTwo, WeightMatrix({1, 2}), 300);
  check_vec(a.eta, {2.0 / 3.0, 1.0 / 3.0}, 1e-2);
  CHECK(a.points == oracle_grid_size(2, 300));

  const auto b = eta_oracle(LoadVector({1, 1}), ServiceSet::from_rows({{2, 1}, {1, 1.5}}), WeightMatrix({1, 1}), 50);
  check_vec(b.eta, {0, 0}, 1e-1);

  // Golden value frozen from a single oracle run at resolution 200.
  const auto c = eta_oracle(kNoBoundaryLoad, kNoBoundary, WeightMatrix::identity(3), 200);
  check_vec(c.eta, {0.875, 0.875, 0.5}, 1e-12);
  check_vec(c.alpha, {0, 0, 1}, 1e-12);
}

TEST_CASE("eta_oracle budget") {
  CHECK(oracle_grid_size(2, 300) == 45451);
  CHECK(oracle_grid_size(3, 200) == 1373701);
  CHECK_THROWS_AS((void)eta_oracle(LoadVector({4, 1}), kTwo, WeightMatrix({1, 2}), 300, 1000), BudgetExceeded);
  CHECK_THROWS_AS((void)eta_oracle(LoadVector({4, 1}), kTwo, WeightMatrix({1, 2}), 0), std::invalid_argument);
}

TEST_CASE("maxmin_eta examples") {
  const auto a = maxmin_eta(LoadVector({4, 1}), kTwo);
  const double peak = *std::max_element(a.begin(), a.end());
  CHECK(std::abs(peak - grid_maxmin({4, 1}, kTwo, 1000)) <= 1e-2);
  check_vec(a, {0.5, 0.5}, 1e-9);

  check_vec(maxmin_eta(LoadVector({1, 1}), ServiceSet::from_rows({{2, 1}, {1, 1.5}})), {0, 0}, 1e-12);
  check_vec(maxmin_eta(LoadVector({3, 3}), ServiceSet::from_rows({{4, 0}, {0, 4}})), {1, 1}, 1e-9);
}

TEST_CASE("proportional_eta examples") {
  const auto a = proportional_eta(LoadVector({4, 1}), kTwo);
  // Independent check: the load just below (1 - K) rho is stabilizable, just above it is not.
  auto shrink = [](const Vec& r, double k) {
    Vec v = r;
    for (double& x : v) x *= (1.0 - k);
    return v;
  };
  CHECK(geometry::is_stabilizable(shrink({4, 1}, a.k + 1e-6), kTwo));
  CHECK_FALSE(geometry::is_stabilizable(shrink({4, 1}, a.k - 1e-6), kTwo));
  CHECK(a.k == doctest::Approx(0.2).epsilon(1e-10));
  check_vec(a.eta, {0.8, 0.2}, 1e-9);

  const Vec near{1.1 * 3.5, 1.1 * 0.5};
  const auto b = proportional_eta(LoadVector(near), kTwo);
  CHECK(b.k == doctest::Approx(0.1 / 1.1).epsilon(1e-10));

  CHECK_THROWS_AS((void)proportional_eta(LoadVector({1, 1}), kTwo), std::domain_error);
}

TEST_CASE("non-convergence carries the best iterate") {
  EtaOptions opts;
  opts.tol = 1e-30;
  opts.max_iter = 5;
  try {
    (void)solve_eta(LoadVector({4, 1}), kTwo, WeightMatrix({1, 2}), opts);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.best().eta.size() == 2);
    CHECK(e.best().iterations == 5);
  }
}

TEST_CASE("solve_eta rejects inconsistent shapes") {
  CHECK_THROWS_AS((void)solve_eta(LoadVector({4, 1, 1}), kTwo, WeightMatrix({1, 2, 1})), ValidationError);
  EtaOptions opts;
  opts.initial_alpha = Vec{1.0};
  CHECK_THROWS_AS((void)solve_eta(LoadVector({4, 1}), kTwo, WeightMatrix({1, 2}), opts), ValidationError);
}

TEST_CASE("property: solver agrees with the lattice oracle") {
  testing::Engine g(101);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = random_overloaded(g, 3, 4);
    const auto sol = solve_eta(inst.rho, inst.services, inst.d);
    const auto orc = eta_oracle(inst.rho, inst.services, inst.d, 300);
    CHECK(max_abs_diff(sol.eta, orc.eta) <= 5e-2);
    CHECK(sol.objective <= orc.objective + 1e-9);
  }
}

TEST_CASE("property: initialization independence, identity, scaling") {
  testing::Engine g(103);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_overloaded(g, 4, 4);
    const auto ref = solve_eta(inst.rho, inst.services, inst.d);
    const auto rep = verify_fixed_point(ref, inst.rho, inst.services, inst.d);
    CHECK(rep.ok);
    CHECK(rep.identity_residual <= 1e-8);

    for (int start = 0; start < 10; ++start) {
      EtaOptions opts;
      Vec a = testing::random_positive(g, inst.services.size(), 0.0, 1.0);
      const double s = testing::uniform(g, 0.0, 1.5);
      double sum = 0.0;
      for (double x : a) sum += x;
      for (double& x : a) x *= s / sum;
      opts.initial_alpha = a;
      CHECK(max_abs_diff(solve_eta(inst.rho, inst.services, inst.d, opts).eta, ref.eta) <= 1e-6);
    }
    const double c = testing::uniform(g, 1e-2, 1e2);
    CHECK(max_abs_diff(solve_eta(inst.rho, inst.services, inst.d.scaled(c)).eta, ref.eta) <= 1e-6);
  }
}

TEST_CASE("property: a dominated extra vector leaves eta unchanged") {
  testing::Engine g(107);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_overloaded(g, 3, 3);
    // 0.9 * (S_1 + S_2) / 2 is dominated by a convex combination of the others.
    Vec extra(inst.services.dim());
    for (std::size_t q = 0; q < extra.size(); ++q) extra[q] = 0.45 * (inst.services.at(0, q) + inst.services.at(1, q));
    ServiceSet bigger = inst.services;
    try {
      bigger = inst.services.with(ServiceVector(extra));
    } catch (const ValidationError&) {
      continue;
    }
    ++checked;
    const auto a = solve_eta(inst.rho, inst.services, inst.d);
    const auto b = solve_eta(inst.rho, bigger, inst.d);
    CHECK(max_abs_diff(a.eta, b.eta) <= 1e-6);
  }
  CHECK(checked > 40);
}
