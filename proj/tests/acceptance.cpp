// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>

#include "mwfair/cli.hpp"
#include "mwfair/control.hpp"
#include "mwfair/eta.hpp"
#include "mwfair/geometry.hpp"
#include "mwfair/sim.hpp"
#include "support.hpp"

using namespace mwfair;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const ServiceSet kTwo = ServiceSet::from_rows({{4, 0}, {3, 1}});
const ServiceSet kThree = ServiceSet::from_rows({{4, 0}, {3, 1}, {1, 2}});
const ServiceSet kCube = ServiceSet::from_rows({{5, 0, 0}, {0, 5, 0}, {0, 0, 5}});
const FairnessTarget kTheta({2.0 / 3.0, 1.0 / 3.0});

Outcome ac1() {
  const auto t0 = Clock::now();
  const auto sol = eta::solve_eta(LoadVector({4, 1}), kTwo, WeightMatrix({1, 2}));
  const double s = seconds_since(t0);
  const double de = max_abs_diff(sol.eta, Vec{2.0 / 3.0, 1.0 / 3.0});
  const double da = max_abs_diff(sol.alpha.values(), Vec{1.0 / 3.0, 2.0 / 3.0});
  return {de <= 1e-6 && da <= 1e-6 && s < 1.0, fmt("|eta err| %.2g, |alpha err| %.2g, %.3g s", de, da, s)};
}

Outcome ac2() {
  testing::Engine g(2);
  struct Case {
    Vec theta, v;
    WeightMatrix published;
    const ServiceSet* services;
  };
  const Case cases[] = {{kTheta.values(), {1, 1}, WeightMatrix({1, 2}), &kThree},
                        {kTheta.values(), {0.5, 1}, WeightMatrix({1, 4}), &kThree},
                        {{0.5, 1.0 / 3.0, 1.0 / 6.0}, {1, 1, 1}, WeightMatrix({2, 3, 6}), &kCube}};
  int mismatches = 0, proportional = 0;
  for (const auto& c : cases) {
    const auto d = control::synthesize_d(c.theta, c.v);
    proportional += d.proportional_to(c.published) ? 1 : 0;
    for (int i = 0; i < 1000; ++i) {
      const WorkloadVector x(testing::random_positive(g, c.theta.size(), 0.0, 10.0));
      if (geometry::cone_of(x, d, *c.services).maximizers != geometry::cone_of(x, c.published, *c.services).maximizers)
        ++mismatches;
    }
  }
  return {proportional == 3 && mismatches == 0,
          fmt("%g of 3 proportional, %g cone mismatches over 3000 points", proportional, mismatches)};
}

Outcome ac3() {
  const auto a = control::check_feasibility(FairnessTarget({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}),
                                            LoadVector({13.0 / 8.0, 13.0 / 8.0, 2.5}),
                                            ServiceSet::from_rows({{1, 0, 1}, {0, 1, 1}, {0.75, 0.75, 2}}));
  const auto b = control::check_feasibility(kTheta, LoadVector({1, 3}), kThree);
  const auto c = control::check_feasibility(kTheta, LoadVector({5, 0.5}), kThree);
  const bool ok = a.verdict == control::Verdict::infeasible_no_boundary &&
                  b.verdict == control::Verdict::infeasible_direction &&
                  c.verdict == control::Verdict::infeasible_direction;
  return {ok, std::string(control::verdict_name(a.verdict)) + ", " + std::string(control::verdict_name(b.verdict)) +
                  ", " + std::string(control::verdict_name(c.verdict))};
}

Outcome ac4() {
  const auto r = control::feasible_directions(LoadVector({4, 4}), ServiceSet::from_rows({{1, 2}, {3, 1}}));
  if (r.pieces.size() != 1 || r.pieces[0].generators.size() != 2) return {false, "expected a single segment"};
  const auto& gens = r.pieces[0].generators;
  const double e = std::max(max_abs_diff(gens[0], Vec{0.25, 0.75}), max_abs_diff(gens[1], Vec{0.6, 0.4}));
  return {e <= 1e-9, fmt("endpoints (%.9g, %.9g) (%.9g, ...)", gens[0][0], gens[0][1], gens[1][0]) +
                         fmt(", max error %.2g", e)};
}

Outcome ac5() {
  const auto res = cli::run_experiment("fig3");
  bool ok = res.runs.size() == 3;
  double worst = 0.0, slowest = 0.0;
  for (const auto& r : res.runs) {
    worst = std::max(worst, r.ratio_deviation);
    slowest = std::max(slowest, r.seconds);
  }
  ok = ok && worst <= 0.05 && slowest < 10.0 && res.config.horizon == 100'000;
  return {ok, fmt("max ratio deviation %.3g over %g runs, slowest run %.3g s", worst,
                  static_cast<double>(res.runs.size()), slowest)};
}

Outcome ac6() {
  const auto res = cli::run_experiment("fig4");
  auto dev = [&](const std::string& label) {
    for (const auto& r : res.runs)
      if (r.label == label) return r.ratio_deviation;
    return std::numeric_limits<double>::infinity();
  };
  const double m1 = dev("fig4_rho1_D1"), m2 = dev("fig4_rho2_D2"), x = dev("fig4_rho2_D1");
  return {m1 <= 0.05 && m2 <= 0.05 && x > 0.05,
          fmt("(rho1,D1) %.3g, (rho2,D2) %.3g, mismatched (rho2,D1) %.3g", m1, m2, x)};
}

Outcome ac7() {
  const auto res = cli::run_experiment("fig5");
  double worst = 0.0, highest_min = 0.0;
  int unstable = 0, stable = 0;
  for (const auto& w : res.windows) {
    if (w.stable) {
      ++stable;
      highest_min = std::max(highest_min, w.estimate.min_total);
    } else {
      ++unstable;
      worst = std::max(worst, w.ratio_deviation);
    }
  }
  return {unstable == 4 && stable == 4 && worst <= 0.05 && highest_min < 50.0,
          fmt("unstable max deviation %.3g, stable windows reach total %.3g, %g windows", worst, highest_min,
              static_cast<double>(res.windows.size()))};
}

struct Instance {
  ServiceSet services;
  LoadVector rho;
  WeightMatrix d;
};

Instance random_overloaded(testing::Engine& g) {
  for (;;) {
    const auto dim = static_cast<std::size_t>(testing::uniform_int(g, 2, 4));
    const auto n = static_cast<std::size_t>(testing::uniform_int(g, 2, 4));
    auto s = testing::random_services(g, n, dim);
    LoadVector rho(testing::random_positive(g, dim, 0.5, 6.0));
    if (geometry::is_stabilizable(rho, s)) continue;
    return {std::move(s), std::move(rho), WeightMatrix(testing::random_positive(g, dim, 0.2, 5.0))};
  }
}

double identity_worst = 0.0;

void record_identity(const eta::EtaSolution& sol, const Instance& inst) {
  identity_worst = std::max(identity_worst,
                            eta::verify_fixed_point(sol, inst.rho, inst.services, inst.d).identity_residual);
}

Outcome ac8a() {
  testing::Engine g(81);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_overloaded(g);
    const auto sol = eta::solve_eta(inst.rho, inst.services, inst.d);
    record_identity(sol, inst);
    worst = std::max(worst, max_abs_diff(sol.eta, eta::eta_oracle(inst.rho, inst.services, inst.d, 300).eta));
  }
  return {worst <= 5e-2, fmt("max |solver - oracle| %.3g over 200 instances", worst)};
}

Outcome ac8b() {
  testing::Engine g(82);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = random_overloaded(g);
    const auto ref = eta::solve_eta(inst.rho, inst.services, inst.d);
    record_identity(ref, inst);
    for (int k = 0; k < 10; ++k) {
      eta::EtaOptions opts;
      Vec a = testing::random_positive(g, inst.services.size(), 0.0, 1.0);
      double sum = 0.0;
      for (double x : a) sum += x;
      const double scale = testing::uniform(g, 0.0, 1.0);
      for (double& x : a) x *= scale / sum;
      opts.initial_alpha = a;
      const auto sol = eta::solve_eta(inst.rho, inst.services, inst.d, opts);
      record_identity(sol, inst);
      worst = std::max(worst, max_abs_diff(sol.eta, ref.eta));
    }
  }
  return {worst <= 1e-6, fmt("max restart spread %.3g over 100 instances x 10 starts", worst)};
}

Outcome ac8c() {
  return {identity_worst <= 1e-8, fmt("max relative identity residual %.3g over accepted solutions", identity_worst)};
}

Outcome ac8d() {
  const SystemSpec spec = validate_system(kTwo, LoadVector({4, 1}), WeightMatrix({1, 2}));
  double lo0 = INFINITY, hi0 = -INFINITY, off = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto tr = sim::run(spec, sim::Policy::maxweight(spec.d), sim::ArrivalModel::uniform({4, 1}, seed), 100'000,
                             WorkloadVector(Vec{0, 0}));
    const auto est = sim::measure_direction(tr);
    if (!est.theta_hat) return {false, "run reported stable"};
    lo0 = std::min(lo0, (*est.theta_hat)[0]);
    hi0 = std::max(hi0, (*est.theta_hat)[0]);
    off = std::max(off, max_abs_diff(*est.theta_hat, kTheta.values()));
  }
  return {hi0 - lo0 <= 0.05 && off <= 0.05, fmt("spread across seeds %.3g, max deviation from target %.3g", hi0 - lo0, off)};
}

// All sub-convex mixtures on a lattice of step 1/res; compare_minimality keeps the qualifying ones.
std::vector<Vec> mixture_lattice(std::size_t n, int res) {
  std::vector<Vec> out;
  Vec cur(n, 0.0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t m, int left) {
    if (m == n) {
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[m] = static_cast<double>(k) / res;
      rec(m + 1, left - k);
    }
  };
  rec(0, res);
  return out;
}

Outcome ac8e() {
  const auto a = sim::compare_minimality(validate_system(kTwo, LoadVector({4, 1}), WeightMatrix({1, 2})), kTheta,
                                         WeightMatrix({1, 2}), mixture_lattice(2, 40), 50'000, 11);
  const auto b = sim::compare_minimality(validate_system(kThree, LoadVector({3, 2}), WeightMatrix({1, 4})), kTheta,
                                         WeightMatrix({1, 4}), mixture_lattice(3, 20), 50'000, 12);
  return {a.ok && b.ok, fmt("min kappa %.4g (%g mixtures)", a.min_kappa, static_cast<double>(a.qualifying)) +
                            fmt("; min kappa %.4g (%g mixtures)", b.min_kappa, static_cast<double>(b.qualifying))};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"AC1 closed-form growth ray", ac1},
      {"AC2 weight synthesis", ac2},
      {"AC3 infeasibility verdicts", ac3},
      {"AC4 feasible-direction segment", ac4},
      {"AC5 convergence from three initial conditions", ac5},
      {"AC6 partition robustness", ac6},
      {"AC7 stable/unstable alternation", ac7},
      {"AC8a solver vs oracle", ac8a},
      {"AC8b initialization independence", ac8b},
      {"AC8c identity residual", ac8c},
      {"AC8d trace independence", ac8d},
      {"AC8e minimality", ac8e},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o{false, ""};
    const auto t = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds_since(t));
    std::fflush(stdout);
  }
  const double total = seconds_since(t0);
  const bool fast = total < 300.0;
  failed += fast ? 0 : 1;
  std::printf("[%s] AC8 suite runtime: %.1f s\n", fast ? "PASS" : "FAIL", total);
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
