#include "mwfair/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "mwfair/kernels/kernels.hpp"
#include "mwfair/lp.hpp"

namespace mwfair::geometry {

namespace {

double scale_of(const Vec& v) {
  double s = 1.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double service_scale(const ServiceSet& services) {
  double s = 1.0;
  for (const auto& sv : services.vectors())
    for (double x : sv.values()) s = std::max(s, x);
  return s;
}

// max_alpha min_q (sum_m alpha_m S_m - target)_q over the simplex of `members`.
double dominance_margin(const Vec& target, const ServiceSet& services, const IndexSet& members) {
  const std::size_t n = members.size();
  const std::size_t dim = services.dim();
  lp::Problem p(n + 1);
  p.set_free(n);
  std::vector<double> obj(n + 1, 0.0);
  obj[n] = 1.0;
  p.set_objective(obj, true);
  std::vector<double> sum(n + 1, 1.0);
  sum[n] = 0.0;
  p.add_row(sum, lp::Sense::equal, 1.0);
  for (std::size_t q = 0; q < dim; ++q) {
    std::vector<double> row(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) row[i] = services.at(members[i], q);
    row[n] = -1.0;
    p.add_row(row, lp::Sense::greater_equal, target[q]);
  }
  const auto r = p.solve();
  if (!r.optimal()) throw std::runtime_error("stability LP failed");
  return r.x[n];
}

}  // namespace

double stability_margin(const Vec& rho, const ServiceSet& services) {
  if (rho.size() != services.dim()) throw ValidationError("dimension mismatch between load and service set");
  IndexSet all(services.size());
  for (std::size_t m = 0; m < all.size(); ++m) all[m] = m;
  return dominance_margin(rho, services, all);
}

bool is_stabilizable(const Vec& rho, const ServiceSet& services) {
  return stability_margin(rho, services) >= -kEqTol * scale_of(rho);
}

bool is_stabilizable(const LoadVector& rho, const ServiceSet& services) {
  return is_stabilizable(rho.values(), services);
}

IndexSet non_essential(const ServiceSet& services) {
  IndexSet out;
  if (services.size() < 2) return out;
  for (std::size_t j = 0; j < services.size(); ++j) {
    IndexSet others;
    for (std::size_t m = 0; m < services.size(); ++m)
      if (m != j) others.push_back(m);
    const auto& sj = services[j].values();
    if (dominance_margin(sj, services, others) >= -kEqTol * scale_of(sj)) out.push_back(j);
  }
  return out;
}

Vec maxweight_scores(std::span<const double> x, const WeightMatrix& d, const ServiceSet& services) {
  const std::size_t dim = services.dim();
  Vec w(dim);
  for (std::size_t q = 0; q < dim; ++q) w[q] = d[q] * x[q];
  Vec out(services.size());
  kernels::scores(services.queue_major(), services.size(), w, out);
  return out;
}

IndexSet near_maximizers(std::span<const double> scores) {
  double hi = scores[0];
  double mag = std::abs(scores[0]);
  for (double s : scores) {
    hi = std::max(hi, s);
    mag = std::max(mag, std::abs(s));
  }
  const double slack = kEqTol * mag;
  IndexSet out;
  for (std::size_t m = 0; m < scores.size(); ++m)
    if (scores[m] >= hi - slack) out.push_back(m);
  return out;
}

ConeAssignment cone_of(const WorkloadVector& x, const WeightMatrix& d, const ServiceSet& services) {
  if (x.dim() != services.dim() || d.dim() != services.dim())
    throw ValidationError("dimension mismatch in cone_of");
  const auto scores = maxweight_scores(x.x, d, services);
  return ConeAssignment{near_maximizers(scores)};
}

std::optional<BoundaryVector> boundary_vector(const IndexSet& subset, const ServiceSet& services,
                                              const std::optional<IndexSet>& support) {
  if (subset.size() < 2) throw std::invalid_argument("boundary_vector needs at least two service vectors");
  const std::size_t dim = services.dim();
  const std::size_t n = services.size();
  for (auto i : subset)
    if (i >= n) throw std::out_of_range("boundary subset index out of range");

  std::vector<bool> allowed(dim, true);
  if (support) {
    std::fill(allowed.begin(), allowed.end(), false);
    for (auto q : *support) allowed.at(q) = true;
  }
  std::vector<bool> inside(n, false);
  for (auto i : subset) inside[i] = true;
  const std::size_t first = subset.front();

  // Variables: v_0..v_{Q-1} >= 0, then one extra (delta or t).
  auto base_rows = [&](lp::Problem& p) {
    std::vector<double> sum(dim + 1, 0.0);
    for (std::size_t q = 0; q < dim; ++q) sum[q] = allowed[q] ? 1.0 : 0.0;
    p.add_row(sum, lp::Sense::equal, 1.0);
    for (std::size_t q = 0; q < dim; ++q) {
      if (allowed[q]) continue;
      std::vector<double> z(dim + 1, 0.0);
      z[q] = 1.0;
      p.add_row(z, lp::Sense::equal, 0.0);
    }
    for (auto i : subset) {
      if (i == first) continue;
      std::vector<double> eq(dim + 1, 0.0);
      for (std::size_t q = 0; q < dim; ++q) eq[q] = services.at(i, q) - services.at(first, q);
      p.add_row(eq, lp::Sense::equal, 0.0);
    }
  };

  const double scale = service_scale(services);
  std::vector<double> obj(dim + 1, 0.0);
  obj[dim] = 1.0;

  // Stage 1: widest strict-dominance gap.
  lp::Problem gap(dim + 1);
  gap.set_free(dim);
  gap.set_objective(obj, true);
  base_rows(gap);
  for (std::size_t m = 0; m < n; ++m) {
    if (inside[m]) continue;
    std::vector<double> row(dim + 1, 0.0);
    for (std::size_t q = 0; q < dim; ++q) row[q] = services.at(first, q) - services.at(m, q);
    row[dim] = -1.0;
    gap.add_row(row, lp::Sense::greater_equal, 0.0);
  }
  {
    std::vector<double> cap(dim + 1, 0.0);
    cap[dim] = 1.0;
    gap.add_row(cap, lp::Sense::less_equal, scale);
  }
  const auto g = gap.solve();
  if (!g.optimal()) return std::nullopt;
  const double delta = g.x[dim];
  if (delta <= kEqTol * scale) return std::nullopt;

  // Stage 2: most interior v keeping half the gap.
  lp::Problem inner(dim + 1);
  inner.set_free(dim);
  inner.set_objective(obj, true);
  base_rows(inner);
  for (std::size_t m = 0; m < n; ++m) {
    if (inside[m]) continue;
    std::vector<double> row(dim + 1, 0.0);
    for (std::size_t q = 0; q < dim; ++q) row[q] = services.at(first, q) - services.at(m, q);
    inner.add_row(row, lp::Sense::greater_equal, 0.5 * delta);
  }
  for (std::size_t q = 0; q < dim; ++q) {
    if (!allowed[q]) continue;
    std::vector<double> row(dim + 1, 0.0);
    row[q] = 1.0;
    row[dim] = -1.0;
    inner.add_row(row, lp::Sense::greater_equal, 0.0);
  }
  const auto s = inner.solve();
  if (!s.optimal()) return std::nullopt;
  if (support && s.x[dim] <= kEqTol) return std::nullopt;

  Vec v(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(dim));
  const double hi = *std::max_element(v.begin(), v.end());
  if (!(hi > 0.0)) return std::nullopt;
  for (std::size_t q = 0; q < dim; ++q) {
    v[q] = allowed[q] ? v[q] / hi : 0.0;
    if (std::abs(v[q]) < 1e-13) v[q] = 0.0;
  }
  IndexSet sorted = subset;
  std::sort(sorted.begin(), sorted.end());
  return BoundaryVector{std::move(v), std::move(sorted)};
}

namespace {

std::vector<BoundaryVector> enumerate(const ServiceSet& services, const std::optional<IndexSet>& support) {
  const std::size_t n = services.size();
  if (n > kMaxEnumeration)
    throw std::length_error("relevant boundary enumeration refused: more than 16 service vectors");
  std::vector<BoundaryVector> out;
  if (n < 2) return out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) < 2) continue;
    IndexSet subset;
    for (std::size_t m = 0; m < n; ++m)
      if (mask & (1u << m)) subset.push_back(m);
    if (auto b = boundary_vector(subset, services, support)) out.push_back(std::move(*b));
  }
  return out;
}

}  // namespace

std::vector<BoundaryVector> relevant_boundaries(const ServiceSet& services) { return enumerate(services, std::nullopt); }

std::vector<BoundaryVector> relevant_boundaries(const ServiceSet& services, const IndexSet& support) {
  return enumerate(services, support);
}

bool satisfies_boundary(const BoundaryVector& b, const ServiceSet& services, double tol) {
  if (b.subset.size() < 2 || b.v.size() != services.dim()) return false;
  if (std::any_of(b.v.begin(), b.v.end(), [](double x) { return x < 0.0; })) return false;
  if (std::all_of(b.v.begin(), b.v.end(), [](double x) { return x == 0.0; })) return false;
  Vec ip(services.size());
  double mag = 1.0;
  for (std::size_t m = 0; m < services.size(); ++m) {
    ip[m] = dot(b.v, services[m].values());
    mag = std::max(mag, std::abs(ip[m]));
  }
  const double ref = ip[b.subset.front()];
  for (std::size_t m = 0; m < services.size(); ++m) {
    const bool in = std::find(b.subset.begin(), b.subset.end(), m) != b.subset.end();
    if (in && std::abs(ip[m] - ref) > tol * mag) return false;
    if (!in && !(ref - ip[m] > tol * mag)) return false;
  }
  return true;
}

}  // namespace mwfair::geometry
