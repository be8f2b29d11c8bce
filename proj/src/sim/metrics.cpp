#include <algorithm>
#include <cmath>
#include <limits>

#include "mwfair/sim.hpp"

namespace mwfair::sim {

namespace {

std::size_t tail_start(std::size_t begin, std::size_t end, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw std::invalid_argument("tail_fraction must lie in (0, 1)");
  const auto span = static_cast<double>(end - begin);
  const auto len = static_cast<std::size_t>(std::floor(tail_fraction * span));
  return end - std::min(len, end - begin);
}

// Average of X(t)/sum X(t) over slots [from, to] with a non-empty system.
std::optional<Vec> mean_ratio(const SimTrace& trace, std::size_t from, std::size_t to) {
  Vec acc(trace.dim(), 0.0);
  std::size_t used = 0;
  for (std::size_t t = from; t <= to; ++t) {
    if (!(trace.total(t) > 0.0)) continue;
    const Vec r = trace.ratio(t);
    for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += r[q];
    ++used;
  }
  if (used == 0) return std::nullopt;
  for (double& v : acc) v /= static_cast<double>(used);
  return acc;
}

}  // namespace

DirectionEstimate measure_direction(const SimTrace& trace, double tail_fraction) {
  const std::size_t horizon = trace.horizon();
  const std::size_t from = std::max<std::size_t>(1, tail_start(0, horizon, tail_fraction));
  DirectionEstimate est;
  est.eta_hat.assign(trace.dim(), 0.0);
  std::size_t n = 0;
  for (std::size_t t = from; t <= horizon; ++t, ++n) {
    const Vec s = trace.scaled(t);
    for (std::size_t q = 0; q < s.size(); ++q) est.eta_hat[q] += s[q];
  }
  for (double& v : est.eta_hat) v /= static_cast<double>(std::max<std::size_t>(n, 1));
  const double peak = *std::max_element(est.eta_hat.begin(), est.eta_hat.end());
  auto ratio = mean_ratio(trace, from, horizon);
  est.stable = !ratio || peak <= kStableScaledBacklog;
  if (!est.stable) est.theta_hat = std::move(ratio);
  return est;
}

WindowEstimate measure_window(const SimTrace& trace, std::size_t begin, std::size_t end, double tail_fraction) {
  if (!(begin < end) || end > trace.horizon()) throw std::out_of_range("measure_window: bad window");
  WindowEstimate w;
  w.begin = begin;
  w.end = end;
  w.growth.resize(trace.dim());
  const auto xb = trace.x(begin), xe = trace.x(end);
  for (std::size_t q = 0; q < trace.dim(); ++q) w.growth[q] = (xe[q] - xb[q]) / static_cast<double>(end - begin);
  w.theta_hat = mean_ratio(trace, tail_start(begin, end, tail_fraction), end);
  w.min_total = std::numeric_limits<double>::infinity();
  for (std::size_t t = begin; t <= end; ++t) w.min_total = std::min(w.min_total, trace.total(t));
  w.end_total = trace.total(end);
  return w;
}

MinimalityReport compare_minimality(const SystemSpec& spec, const FairnessTarget& theta, const WeightMatrix& d_star,
                                    const std::vector<Vec>& alternatives, std::size_t horizon, std::uint64_t seed) {
  const auto arrivals = ArrivalModel::uniform(spec.rho.values(), seed);
  const WorkloadVector x0(Vec(spec.dim(), 0.0));
  MinimalityReport rep;
  rep.eta_maxweight = measure_direction(run(spec, Policy::maxweight(d_star), arrivals, horizon, x0)).eta_hat;
  double mw_total = 0.0;
  for (double v : rep.eta_maxweight) mw_total += v;

  rep.min_kappa = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < alternatives.size(); ++i) {
    MinimalityEntry e;
    e.beta = alternatives[i];
    e.analytic_direction = normalize_sum(positive_part(residual_load(spec.rho.values(), spec.services, e.beta)));
    e.qualifies = !e.analytic_direction.empty() && max_abs_diff(e.analytic_direction, theta.values()) <= kDirectionFilter;
    if (e.qualifies) {
      const auto policy = Policy::stationary_mixture(e.beta, seed + 1 + i);
      e.eta_hat = measure_direction(run(spec, policy, arrivals, horizon, x0)).eta_hat;
      double total = 0.0;
      for (double v : e.eta_hat) total += v;
      e.kappa = mw_total > 0.0 ? total / mw_total : std::numeric_limits<double>::infinity();
      rep.min_kappa = std::min(rep.min_kappa, e.kappa);
      ++rep.qualifying;
    }
    rep.entries.push_back(std::move(e));
  }
  rep.ok = rep.qualifying > 0 && rep.min_kappa >= 1.0 - kKappaSlack;
  return rep;
}

}  // namespace mwfair::sim
