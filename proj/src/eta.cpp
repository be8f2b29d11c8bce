#include "mwfair/eta.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "mwfair/geometry.hpp"
#include "mwfair/kernels/kernels.hpp"
#include "mwfair/lp.hpp"

namespace mwfair::eta {

namespace {

double inf_norm_scale(std::span<const double> v) {
  double s = 1.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

// Euclidean projection onto {alpha >= 0, sum alpha <= 1}.
void project_subsimplex(Vec& a) {
  double sum = 0.0;
  for (double& x : a) {
    x = std::max(x, 0.0);
    sum += x;
  }
  if (sum <= 1.0) return;
  // Projection onto the unit simplex by sorting (O(n log n)).
  Vec u = a;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, shift = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double cand = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) shift = cand;
  }
  for (double& x : a) x = std::max(x - shift, 0.0);
}

struct Problem {
  const Vec& rho;
  const ServiceSet& services;
  const WeightMatrix& d;

  // Returns f(alpha); fills the clipped residual.
  double eval(std::span<const double> alpha, Vec& pos) const {
    pos = positive_part(residual_load(rho, services, alpha));
    return weighted_dot(pos, d.diagonal(), pos);
  }

  void gradient(const Vec& pos, Vec& g) const {
    const std::size_t dim = services.dim();
    Vec w(dim);
    for (std::size_t q = 0; q < dim; ++q) w[q] = -2.0 * d[q] * pos[q];
    g.resize(services.size());
    kernels::scores(services.queue_major(), services.size(), w, g);
  }
};

EtaSolution assemble(const Vec& rho, const ServiceSet& services, const WeightMatrix& d, Vec alpha,
                     std::size_t iterations) {
  EtaSolution sol;
  sol.eta = positive_part(residual_load(rho, services, alpha));
  for (double& a : alpha)
    if (a < 0.0) a = 0.0;
  // LP round-off can leave the sum a hair above one.
  const double s = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  if (s > 1.0)
    for (double& a : alpha) a /= s;
  sol.alpha = MixtureWeights(std::move(alpha));
  sol.objective = weighted_dot(sol.eta, d.diagonal(), sol.eta);
  sol.iterations = iterations;
  return sol;
}

// Solves the fixed-point system exactly once the growing queues P and the
// tied service vectors M are known. Every constraint is linear in (alpha_M, eta_P).
std::optional<Vec> solve_active_set(const Vec& rho, const ServiceSet& services, const WeightMatrix& d,
                                    const IndexSet& grow, const IndexSet& tied) {
  const std::size_t dim = services.dim();
  const std::size_t nm = tied.size(), np = grow.size();
  if (nm == 0 || np == 0) return std::nullopt;
  std::vector<int> pos_of(dim, -1);
  for (std::size_t i = 0; i < np; ++i) pos_of[grow[i]] = static_cast<int>(i);
  std::vector<bool> in_tied(services.size(), false);
  for (auto m : tied) in_tied[m] = true;

  const std::size_t nv = nm + np;
  lp::Problem p(nv);
  p.set_objective(std::vector<double>(nv, 0.0), false);
  for (std::size_t q = 0; q < dim; ++q) {
    std::vector<double> row(nv, 0.0);
    for (std::size_t i = 0; i < nm; ++i) row[i] = services.at(tied[i], q);
    if (pos_of[q] >= 0) {
      row[nm + static_cast<std::size_t>(pos_of[q])] = 1.0;
      p.add_row(row, lp::Sense::equal, rho[q]);
    } else {
      p.add_row(row, lp::Sense::greater_equal, rho[q]);
    }
  }
  {
    std::vector<double> row(nv, 0.0);
    for (std::size_t i = 0; i < nm; ++i) row[i] = 1.0;
    p.add_row(row, lp::Sense::equal, 1.0);
  }
  const std::size_t m0 = tied.front();
  auto score_diff = [&](std::size_t a, std::size_t b) {
    std::vector<double> row(nv, 0.0);
    for (std::size_t i = 0; i < np; ++i) {
      const std::size_t q = grow[i];
      row[nm + i] = d[q] * (services.at(a, q) - services.at(b, q));
    }
    return row;
  };
  for (std::size_t i = 1; i < nm; ++i) p.add_row(score_diff(tied[i], m0), lp::Sense::equal, 0.0);
  for (std::size_t k = 0; k < services.size(); ++k)
    if (!in_tied[k]) p.add_row(score_diff(m0, k), lp::Sense::greater_equal, 0.0);

  const auto r = p.solve(1e-12);
  if (!r.optimal()) return std::nullopt;
  Vec alpha(services.size(), 0.0);
  for (std::size_t i = 0; i < nm; ++i) alpha[tied[i]] = r.x[i];
  return alpha;
}

std::optional<EtaSolution> polish(const Vec& rho, const LoadVector& load, const ServiceSet& services,
                                  const WeightMatrix& d, const Vec& alpha, std::size_t iterations, double tol) {
  const Vec approx = positive_part(residual_load(rho, services, alpha));
  const double rho_scale = inf_norm_scale(rho);
  Vec scores(services.size());
  for (std::size_t m = 0; m < services.size(); ++m) scores[m] = weighted_dot(approx, d.diagonal(), services[m].values());
  const double hi = *std::max_element(scores.begin(), scores.end());
  const double score_scale = inf_norm_scale(scores);

  IndexSet last_grow, last_tied;
  for (double rel = 1e-2; rel >= 1e-11; rel *= 0.1) {
    IndexSet grow, tied;
    for (std::size_t q = 0; q < rho.size(); ++q)
      if (approx[q] > rel * rho_scale) grow.push_back(q);
    for (std::size_t m = 0; m < services.size(); ++m)
      if (hi - scores[m] <= rel * score_scale) tied.push_back(m);
    if (grow == last_grow && tied == last_tied) continue;
    last_grow = grow;
    last_tied = tied;
    auto a = solve_active_set(rho, services, d, grow, tied);
    if (!a) continue;
    EtaSolution sol = assemble(rho, services, d, std::move(*a), iterations);
    const auto report = verify_fixed_point(sol, load, services, d, tol);
    if (report.ok) {
      sol.kkt_residual = report.max_residual();
      return sol;
    }
  }
  return std::nullopt;
}

}  // namespace

double objective(const Vec& rho, const ServiceSet& services, const WeightMatrix& d, std::span<const double> alpha) {
  const Vec pos = positive_part(residual_load(rho, services, alpha));
  return weighted_dot(pos, d.diagonal(), pos);
}

EtaSolution solve_eta(const LoadVector& load, const ServiceSet& services, const WeightMatrix& d,
                      const EtaOptions& options) {
  const Vec& rho = load.values();
  const std::size_t n = services.size();
  if (services.dim() != rho.size() || d.dim() != rho.size()) throw ValidationError("dimension mismatch in solve_eta");

  // Stable load: zero ray, with a dominating mixture as witness.
  {
    lp::Problem p(n);
    p.set_objective(std::vector<double>(n, 0.0), false);
    p.add_row(std::vector<double>(n, 1.0), lp::Sense::equal, 1.0);
    for (std::size_t q = 0; q < rho.size(); ++q) {
      std::vector<double> row(n);
      for (std::size_t m = 0; m < n; ++m) row[m] = services.at(m, q);
      p.add_row(row, lp::Sense::greater_equal, rho[q]);
    }
    if (geometry::is_stabilizable(load, services)) {
      const auto r = p.solve();
      Vec alpha = r.optimal() ? r.x : Vec(n, 1.0 / static_cast<double>(n));
      EtaSolution sol = assemble(rho, services, d, std::move(alpha), 0);
      sol.eta.assign(rho.size(), 0.0);
      sol.objective = 0.0;
      sol.stable = true;
      sol.kkt_residual = verify_fixed_point(sol, load, services, d, options.tol).max_residual();
      return sol;
    }
  }

  const Problem prob{rho, services, d};
  Vec alpha = options.initial_alpha.value_or(Vec(n, 1.0 / static_cast<double>(n)));
  if (alpha.size() != n) throw ValidationError("initial alpha has wrong size");
  project_subsimplex(alpha);

  double lipschitz = 0.0;
  for (std::size_t m = 0; m < n; ++m) lipschitz += weighted_dot(services[m].values(), d.diagonal(), services[m].values());
  lipschitz *= 2.0;
  double step = 1.0 / lipschitz;
  const double max_step = 1e6 / lipschitz;

  Vec pos, trial_pos, g, trial(n);
  double f = prob.eval(alpha, pos);
  Vec best_alpha = alpha;
  double best_f = f;
  const double sigma = 1e-4;

  for (std::size_t it = 0; it < options.max_iter; ++it) {
    if (options.polish_every != 0 && it % options.polish_every == 0) {
      if (auto sol = polish(rho, load, services, d, alpha, it, options.tol)) return *sol;
    }
    prob.gradient(pos, g);
    bool accepted = false;
    bool stalled = false;
    for (int bt = 0; bt < 80; ++bt) {
      for (std::size_t m = 0; m < n; ++m) trial[m] = alpha[m] - step * g[m];
      project_subsimplex(trial);
      double decrease = 0.0;
      double moved = 0.0;
      for (std::size_t m = 0; m < n; ++m) {
        decrease += g[m] * (trial[m] - alpha[m]);
        moved = std::max(moved, std::abs(trial[m] - alpha[m]));
      }
      if (moved <= 1e-16) {
        stalled = true;
        break;
      }
      const double ft = prob.eval(trial, trial_pos);
      if (ft <= f + sigma * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (stalled || !accepted) {
      if (auto sol = polish(rho, load, services, d, alpha, it, options.tol)) return *sol;
      if (step < 1.0 / lipschitz) {
        step = 1.0 / lipschitz;
        continue;
      }
      break;
    }
    alpha.swap(trial);
    pos.swap(trial_pos);
    f = prob.eval(alpha, pos);
    if (f < best_f) {
      best_f = f;
      best_alpha = alpha;
    }
    step = std::min(step * 2.0, max_step);
  }

  if (auto sol = polish(rho, load, services, d, best_alpha, options.max_iter, options.tol)) return *sol;
  EtaSolution best = assemble(rho, services, d, best_alpha, options.max_iter);
  best.kkt_residual = verify_fixed_point(best, load, services, d, options.tol).max_residual();
  std::ostringstream os;
  os << "growth-ray solver did not converge after " << options.max_iter << " iterations (residual "
     << best.kkt_residual << ")";
  throw NonConvergence(os.str(), std::move(best));
}

double FixedPointReport::max_residual() const noexcept {
  return std::max({shape_residual, simplex_residual, cone_residual, identity_residual});
}

double identity_scale(std::span<const double> eta, const LoadVector& rho, const WeightMatrix& d) {
  return std::max(1.0, std::abs(weighted_dot(rho.values(), d.diagonal(), eta)));
}

FixedPointReport verify_fixed_point(std::span<const double> eta, std::span<const double> alpha, const LoadVector& rho,
                                    const ServiceSet& services, const WeightMatrix& d, double tol) {
  FixedPointReport rep;
  const std::size_t dim = services.dim();
  if (eta.size() != dim || alpha.size() != services.size() || rho.dim() != dim || d.dim() != dim) return rep;

  const Vec shaped = positive_part(residual_load(rho.values(), services, alpha));
  rep.shape_residual = max_abs_diff(eta, shaped) / inf_norm_scale(rho.values());

  const bool zero_ray = std::all_of(eta.begin(), eta.end(), [](double x) { return x == 0.0; });
  rep.simplex_waived = zero_ray;
  const double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  double neg = 0.0;
  for (double a : alpha) neg = std::max(neg, -a);
  rep.simplex_residual = std::max(neg, zero_ray ? std::max(sum - 1.0, 0.0) : std::abs(sum - 1.0));

  Vec scores(services.size());
  for (std::size_t m = 0; m < services.size(); ++m) scores[m] = weighted_dot(eta, d.diagonal(), services[m].values());
  const double hi = *std::max_element(scores.begin(), scores.end());
  const double mag = inf_norm_scale(scores);
  for (std::size_t m = 0; m < services.size(); ++m)
    if (alpha[m] > tol) rep.cone_residual = std::max(rep.cone_residual, (hi - scores[m]) / mag);

  const double lhs = weighted_dot(eta, d.diagonal(), eta);
  const double rhs = weighted_dot(rho.values(), d.diagonal(), eta) - hi;
  rep.identity_residual = std::abs(lhs - rhs) / identity_scale(eta, rho, d);

  rep.ok = rep.max_residual() <= tol;
  return rep;
}

FixedPointReport verify_fixed_point(const EtaSolution& candidate, const LoadVector& rho, const ServiceSet& services,
                                    const WeightMatrix& d, double tol) {
  return verify_fixed_point(candidate.eta, candidate.alpha.values(), rho, services, d, tol);
}

std::uint64_t oracle_grid_size(std::size_t n, std::size_t resolution) {
  // C(resolution + n, n), saturating.
  long double c = 1.0L;
  for (std::size_t i = 1; i <= n; ++i) c = c * static_cast<long double>(resolution + i) / static_cast<long double>(i);
  if (c > 1.8e19L) return UINT64_MAX;
  return static_cast<std::uint64_t>(std::llroundl(c));
}

OracleResult eta_oracle(const LoadVector& load, const ServiceSet& services, const WeightMatrix& d,
                        std::size_t resolution, std::uint64_t budget) {
  if (resolution == 0) throw std::invalid_argument("oracle resolution must be positive");
  const std::size_t n = services.size();
  const std::size_t dim = services.dim();
  const std::uint64_t points = oracle_grid_size(n, resolution);
  if (points > budget) {
    std::ostringstream os;
    os << "oracle lattice has " << points << " points, budget is " << budget;
    throw BudgetExceeded(os.str());
  }
  const Vec& rho = load.values();
  const double step = 1.0 / static_cast<double>(resolution);
  const Vec& last = services[n - 1].values();
  const auto line = kernels::line_min_for(kernels::active_isa());

  std::vector<std::size_t> k(n, 0);
  std::vector<std::size_t> best_k(n, 0);
  double best = std::numeric_limits<double>::infinity();
  Vec base(dim);

  // Enumerate k_0..k_{n-2} with sum <= resolution; the last coordinate is a SIMD line scan.
  std::function<void(std::size_t, std::size_t)> recurse = [&](std::size_t m, std::size_t remaining) {
    if (m + 1 == n) {
      for (std::size_t q = 0; q < dim; ++q) {
        double b = rho[q];
        for (std::size_t j = 0; j + 1 < n; ++j) b -= (static_cast<double>(k[j]) * step) * services.at(j, q);
        base[q] = b;
      }
      const auto r = line(base.data(), last.data(), d.diagonal().data(), dim, step, remaining + 1);
      if (r.value < best) {
        best = r.value;
        best_k = k;
        best_k[n - 1] = r.index;
      }
      return;
    }
    for (std::size_t v = 0; v <= remaining; ++v) {
      k[m] = v;
      recurse(m + 1, remaining - v);
    }
    k[m] = 0;
  };
  recurse(0, resolution);

  OracleResult out;
  out.alpha.resize(n);
  for (std::size_t m = 0; m < n; ++m) out.alpha[m] = static_cast<double>(best_k[m]) * step;
  out.eta = positive_part(residual_load(rho, services, out.alpha));
  out.objective = best;
  out.points = points;
  return out;
}

Vec maxmin_eta(const LoadVector& load, const ServiceSet& services) {
  const Vec& rho = load.values();
  const std::size_t n = services.size(), dim = services.dim();
  // Variables: alpha (n), eta (dim), t.
  const std::size_t nv = n + dim + 1, t_idx = n + dim;
  auto build = [&](lp::Problem& p) {
    for (std::size_t q = 0; q < dim; ++q) {
      std::vector<double> row(nv, 0.0);
      for (std::size_t m = 0; m < n; ++m) row[m] = services.at(m, q);
      row[n + q] = 1.0;
      p.add_row(row, lp::Sense::greater_equal, rho[q]);
      std::vector<double> cap(nv, 0.0);
      cap[n + q] = 1.0;
      cap[t_idx] = -1.0;
      p.add_row(cap, lp::Sense::less_equal, 0.0);
    }
    std::vector<double> sum(nv, 0.0);
    for (std::size_t m = 0; m < n; ++m) sum[m] = 1.0;
    p.add_row(sum, lp::Sense::less_equal, 1.0);
  };

  lp::Problem first(nv);
  std::vector<double> obj(nv, 0.0);
  obj[t_idx] = 1.0;
  first.set_objective(obj, false);
  build(first);
  const auto r1 = first.solve();
  if (!r1.optimal()) throw std::runtime_error("max-min LP failed");
  const double t_star = r1.x[t_idx];

  lp::Problem second(nv);
  std::vector<double> total(nv, 0.0);
  for (std::size_t q = 0; q < dim; ++q) total[n + q] = 1.0;
  second.set_objective(total, false);
  build(second);
  {
    std::vector<double> fix(nv, 0.0);
    fix[t_idx] = 1.0;
    second.add_row(fix, lp::Sense::less_equal, t_star + 1e-12 * std::max(1.0, t_star));
  }
  const auto r2 = second.solve();
  const auto& x = r2.optimal() ? r2.x : r1.x;
  const Vec alpha(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  return positive_part(residual_load(rho, services, alpha));
}

ProportionalResult proportional_eta(const LoadVector& load, const ServiceSet& services, double tol) {
  const Vec& rho = load.values();
  if (geometry::is_stabilizable(load, services))
    throw std::domain_error("proportional fairness needs an overloaded system (rho outside the stability region)");
  auto shrunk = [&](double k) {
    Vec v = rho;
    for (double& x : v) x *= (1.0 - k);
    return v;
  };
  double lo = 0.0, hi = 1.0;  // lo infeasible, hi feasible
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (geometry::stability_margin(shrunk(mid), services) >= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  Vec eta = rho;
  for (double& x : eta) x *= hi;
  return ProportionalResult{std::move(eta), hi};
}

}  // namespace mwfair::eta
