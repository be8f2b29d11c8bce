#include "mwfair/control.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "mwfair/eta.hpp"
#include "mwfair/lp.hpp"

namespace mwfair::control {

namespace {

constexpr double kOpenTol = 1e-9;
constexpr double kMinRate = 1e-9;

IndexSet all_indices(std::size_t n) {
  IndexSet s(n);
  for (std::size_t m = 0; m < n; ++m) s[m] = m;
  return s;
}

// Solves A x = b for square A by partial pivoting; false when singular.
bool solve_square(std::vector<double> a, Vec b, std::size_t n, Vec& x) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-12) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return true;
}

// Vertices of {alpha in simplex(B) : sum alpha_i S_i <= rho}, as full-length mixtures.
std::vector<Vec> residual_polytope_vertices(const Vec& rho, const ServiceSet& services, const IndexSet& members) {
  const std::size_t b = members.size(), dim = services.dim();
  const std::size_t n_ineq = b + dim;
  std::vector<Vec> out;
  auto ineq_row = [&](std::size_t i, Vec& row, double& rhs) {
    row.assign(b, 0.0);
    if (i < b) {
      row[i] = 1.0;
      rhs = 0.0;
    } else {
      for (std::size_t j = 0; j < b; ++j) row[j] = services.at(members[j], i - b);
      rhs = rho[i - b];
    }
  };
  const double scale = std::max(1.0, *std::max_element(rho.begin(), rho.end()));

  std::vector<std::size_t> pick(b - 1);
  std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t depth, std::size_t start) {
    if (depth == b - 1) {
      std::vector<double> a(b * b);
      Vec rhs(b);
      for (std::size_t j = 0; j < b; ++j) a[j] = 1.0;
      rhs[0] = 1.0;
      for (std::size_t r = 0; r + 1 < b; ++r) {
        Vec row;
        double r_rhs;
        ineq_row(pick[r], row, r_rhs);
        for (std::size_t j = 0; j < b; ++j) a[(r + 1) * b + j] = row[j];
        rhs[r + 1] = r_rhs;
      }
      Vec x;
      if (!solve_square(a, rhs, b, x)) return;
      for (double& xi : x)
        if (std::abs(xi) < 1e-13) xi = 0.0;
      if (std::any_of(x.begin(), x.end(), [](double xi) { return xi < -1e-12; })) return;
      for (std::size_t q = 0; q < dim; ++q) {
        double s = 0.0;
        for (std::size_t j = 0; j < b; ++j) s += x[j] * services.at(members[j], q);
        if (s > rho[q] + 1e-12 * scale) return;
      }
      Vec full(services.size(), 0.0);
      for (std::size_t j = 0; j < b; ++j) full[members[j]] = std::max(x[j], 0.0);
      for (const auto& seen : out)
        if (max_abs_diff(seen, full) < 1e-12) return;
      out.push_back(std::move(full));
      return;
    }
    for (std::size_t i = start; i < n_ineq; ++i) {
      pick[depth] = i;
      choose(depth + 1, i + 1);
    }
  };
  choose(0, 0);
  return out;
}

// Extreme points of a finite set of directions on the simplex (Q <= 3), in hull order.
std::vector<Vec> direction_hull(std::vector<Vec> pts) {
  std::vector<Vec> uniq;
  for (auto& p : pts) {
    bool dup = false;
    for (const auto& u : uniq)
      if (max_abs_diff(u, p) < 1e-12) dup = true;
    if (!dup) uniq.push_back(std::move(p));
  }
  if (uniq.size() <= 1 || uniq.front().size() <= 1) return uniq;
  if (uniq.front().size() == 2) {
    auto [lo, hi] = std::minmax_element(uniq.begin(), uniq.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0]; });
    if (max_abs_diff(*lo, *hi) < 1e-12) return {*lo};
    return {*lo, *hi};
  }
  // Monotone chain on (theta_1, theta_2).
  std::sort(uniq.begin(), uniq.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
  auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Vec> hull(2 * uniq.size());
  std::size_t k = 0;
  for (const auto& p : uniq) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 1e-15) --k;
    hull[k++] = p;
  }
  for (std::size_t i = uniq.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], uniq[i]) <= 1e-15) --k;
    hull[k++] = uniq[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

}  // namespace

std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::feasible: return "FEASIBLE";
    case Verdict::infeasible_no_boundary: return "INFEASIBLE_NO_BOUNDARY";
    case Verdict::infeasible_direction: return "INFEASIBLE_DIRECTION";
    case Verdict::stable: return "STABLE";
  }
  return "UNKNOWN";
}

WeightMatrix synthesize_d(std::span<const double> target, std::span<const double> v) {
  if (target.size() != v.size()) throw ValidationError("synthesize_d: dimension mismatch");
  Vec d(v.size());
  for (std::size_t q = 0; q < v.size(); ++q) {
    const bool vz = v[q] <= 0.0, tz = target[q] <= 0.0;
    if (vz != tz)
      throw ValidationError("synthesize_d: support mismatch at queue " + std::to_string(q + 1) +
                            " (boundary and target must vanish on the same queues)");
    d[q] = vz ? 1.0 : v[q] / target[q];
  }
  return WeightMatrix(std::move(d));
}

DirectionFit fit_direction(const FairnessTarget& theta, const Vec& rho, const ServiceSet& services,
                           const IndexSet& members) {
  const std::size_t b = members.size(), dim = services.dim();
  // Variables: alpha_i (b), c, t (free).
  const std::size_t nv = b + 2, c_idx = b, t_idx = b + 1;
  lp::Problem p(nv);
  p.set_free(t_idx);
  std::vector<double> obj(nv, 0.0);
  obj[t_idx] = 1.0;
  p.set_objective(obj, true);
  {
    std::vector<double> sum(nv, 0.0);
    for (std::size_t i = 0; i < b; ++i) sum[i] = 1.0;
    p.add_row(sum, lp::Sense::equal, 1.0);
  }
  for (std::size_t q = 0; q < dim; ++q) {
    std::vector<double> row(nv, 0.0);
    for (std::size_t i = 0; i < b; ++i) row[i] = services.at(members[i], q);
    if (theta[q] > 0.0) {
      row[c_idx] = theta[q];
      p.add_row(row, lp::Sense::equal, rho[q]);
    } else {
      p.add_row(row, lp::Sense::greater_equal, rho[q]);
    }
  }
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> row(nv, 0.0);
    row[i] = 1.0;
    row[t_idx] = -1.0;
    p.add_row(row, lp::Sense::greater_equal, 0.0);
  }
  {
    std::vector<double> row(nv, 0.0);
    row[c_idx] = 1.0;
    p.add_row(row, lp::Sense::greater_equal, kMinRate);
  }
  const auto r = p.solve(1e-12);
  DirectionFit fit;
  if (!r.optimal()) return fit;
  fit.closed = true;
  fit.margin = r.x[t_idx];
  fit.open = fit.margin > kOpenTol;
  fit.c = r.x[c_idx];
  fit.alpha.assign(services.size(), 0.0);
  for (std::size_t i = 0; i < b; ++i) fit.alpha[members[i]] = std::max(r.x[i], 0.0);
  return fit;
}

FeasibilityReport check_feasibility(const FairnessTarget& theta, const LoadVector& rho, const ServiceSet& services) {
  if (theta.dim() != rho.dim() || services.dim() != rho.dim())
    throw ValidationError("check_feasibility: dimension mismatch");
  FeasibilityReport rep;
  if (geometry::is_stabilizable(rho, services)) {
    rep.verdict = Verdict::stable;
    rep.reason = "load is inside the stability region; backlogs stay bounded";
    return rep;
  }
  const auto boundaries = geometry::relevant_boundaries(services, theta.support());
  if (boundaries.empty()) {
    rep.verdict = Verdict::infeasible_no_boundary;
    rep.reason = "no relevant boundary has a boundary vector with the target's support";
    return rep;
  }

  const geometry::BoundaryVector* chosen = nullptr;
  DirectionFit best;
  bool edge_only = false;
  for (const auto& b : boundaries) {
    auto fit = fit_direction(theta, rho.values(), services, b.subset);
    if (fit.open && (chosen == nullptr || fit.margin > best.margin)) {
      chosen = &b;
      best = std::move(fit);
    } else if (fit.closed) {
      edge_only = true;
    }
  }

  if (chosen != nullptr) {
    rep.verdict = Verdict::feasible;
    rep.subset = chosen->subset;
    rep.v = *chosen;
    Vec alpha = best.alpha;
    rep.eta = positive_part(residual_load(rho.values(), services, alpha));
    rep.alpha = MixtureWeights(std::move(alpha));
    rep.d = synthesize_d(theta.values(), chosen->v);
    rep.verified = eta::verify_fixed_point(*rep.eta, rep.alpha->values(), rho, services, *rep.d).ok;
    rep.reason = rep.verified ? "boundary placed on the target direction"
                              : "witness failed the fixed-point re-check under the synthesized D";
    return rep;
  }
  if (edge_only) {
    rep.verdict = Verdict::infeasible_direction;
    rep.reason = "the target is reachable only on the edge of a cell (some tied vector would go unused)";
    return rep;
  }
  if (fit_direction(theta, rho.values(), services, all_indices(services.size())).closed) {
    rep.verdict = Verdict::infeasible_no_boundary;
    rep.reason = "mixtures realizing the target exist, but no boundary vector supports their service vectors";
  } else {
    rep.verdict = Verdict::infeasible_direction;
    rep.reason = "no mixture of service vectors leaves a residual load along the target";
  }
  return rep;
}

DirectionSet feasible_directions(const LoadVector& rho, const ServiceSet& services) {
  if (rho.dim() > 3) throw std::domain_error("feasible_directions enumerates explicitly and supports at most 3 queues");
  if (rho.dim() != services.dim()) throw ValidationError("feasible_directions: dimension mismatch");
  DirectionSet out;
  if (geometry::is_stabilizable(rho, services)) {
    out.stable = true;
    return out;
  }
  if (services.size() == 1) {
    const Vec dir = normalize_sum(positive_part(residual_load(rho.values(), services, Vec{1.0})));
    out.pieces.push_back(DirectionPiece{{0}, {}, {dir}});
    return out;
  }
  const auto boundaries = geometry::relevant_boundaries(services, all_indices(rho.dim()));
  for (const auto& b : boundaries) {
    std::vector<Vec> gens;
    for (const auto& alpha : residual_polytope_vertices(rho.values(), services, b.subset)) {
      Vec dir = normalize_sum(positive_part(residual_load(rho.values(), services, alpha)));
      if (!dir.empty()) gens.push_back(std::move(dir));
    }
    if (gens.empty()) continue;
    out.pieces.push_back(DirectionPiece{b.subset, b.v, direction_hull(std::move(gens))});
  }
  return out;
}

OverloadPartition partition_overload(const FairnessTarget& theta, const ServiceSet& services) {
  if (theta.dim() != services.dim()) throw ValidationError("partition_overload: dimension mismatch");
  if (services.size() < 2) throw std::invalid_argument("partition_overload needs at least two service vectors");
  OverloadPartition part{theta, services, {}};
  for (const auto& b : geometry::relevant_boundaries(services, theta.support())) {
    std::vector<Vec> verts;
    for (auto m : b.subset) verts.push_back(services[m].values());
    part.cells.push_back(Cell{b.subset, b.v, synthesize_d(theta.values(), b.v), std::move(verts), theta.values()});
  }
  return part;
}

std::optional<std::size_t> locate_cell(const LoadVector& rho, const OverloadPartition& partition) {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < partition.cells.size(); ++i) {
    const auto fit = fit_direction(partition.theta, rho.values(), partition.services, partition.cells[i].subset);
    if (!fit.open) continue;
    if (found) throw std::logic_error("load vector lies in two overload cells; partition geometry is inconsistent");
    found = i;
  }
  return found;
}

std::optional<WeightMatrix> classify_rho(const LoadVector& rho, const OverloadPartition& partition) {
  if (auto i = locate_cell(rho, partition)) return partition.cells[*i].d;
  return std::nullopt;
}

}  // namespace mwfair::control
