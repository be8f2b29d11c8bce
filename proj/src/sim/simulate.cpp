#include <algorithm>
#include <bit>
#include <cmath>

#include "mwfair/geometry.hpp"
#include "mwfair/kernels/kernels.hpp"
#include "mwfair/sim.hpp"

namespace mwfair::sim {

Policy Policy::maxweight(WeightMatrix d) {
  Policy p;
  p.kind = PolicyKind::maxweight;
  p.d = std::move(d);
  return p;
}

Policy Policy::stationary_mixture(Vec beta, std::uint64_t seed) {
  MixtureWeights checked(beta);
  Policy p;
  p.kind = PolicyKind::stationary_mixture;
  p.beta = checked.values();
  p.seed = seed;
  return p;
}

Policy Policy::fixed(std::size_t index) {
  Policy p;
  p.kind = PolicyKind::fixed;
  p.index = index;
  return p;
}

namespace {

std::size_t argmax_lowest(std::span<const double> scores) {
  double hi = scores[0], mag = std::abs(scores[0]);
  for (double s : scores) {
    hi = std::max(hi, s);
    mag = std::max(mag, std::abs(s));
  }
  const double slack = geometry::kEqTol * mag;
  for (std::size_t m = 0; m < scores.size(); ++m)
    if (scores[m] >= hi - slack) return m;
  return 0;
}

}  // namespace

std::size_t maxweight_select(std::span<const double> x, const WeightMatrix& d, const ServiceSet& services) {
  if (x.size() != services.dim() || d.dim() != services.dim())
    throw ValidationError("maxweight_select: dimension mismatch");
  const auto scores = geometry::maxweight_scores(x, d, services);
  return argmax_lowest(scores);
}

Scheduler::Scheduler(const Policy& policy, const ServiceSet& services)
    : policy_(&policy), services_(&services), rng_(policy.seed, 0x5C4ED), weights_(services.dim()),
      scores_(services.size()) {
  switch (policy.kind) {
    case PolicyKind::maxweight:
      if (!policy.d || policy.d->dim() != services.dim())
        throw ValidationError("maxweight policy needs a weight matrix of the system's dimension");
      break;
    case PolicyKind::stationary_mixture:
      if (policy.beta.size() != services.size())
        throw ValidationError("mixture weights must have one entry per service vector");
      break;
    case PolicyKind::fixed:
      if (policy.index >= services.size()) throw ValidationError("fixed policy index out of range");
      break;
  }
}

std::int64_t Scheduler::select(std::span<const double> x) {
  switch (policy_->kind) {
    case PolicyKind::maxweight: {
      const auto& d = *policy_->d;
      for (std::size_t q = 0; q < weights_.size(); ++q) weights_[q] = d[q] * x[q];
      kernels::scores(services_->queue_major(), services_->size(), weights_, scores_);
      return static_cast<std::int64_t>(argmax_lowest(scores_));
    }
    case PolicyKind::stationary_mixture: {
      const double u = rng_.uniform01();
      double acc = 0.0;
      for (std::size_t m = 0; m < policy_->beta.size(); ++m) {
        acc += policy_->beta[m];
        if (u < acc) return static_cast<std::int64_t>(m);
      }
      return kIdle;
    }
    case PolicyKind::fixed: return static_cast<std::int64_t>(policy_->index);
  }
  return kIdle;
}

void step(std::span<const double> x, std::span<const double> a, const ServiceSet& services, std::int64_t chosen,
          std::span<double> x_next, std::span<double> departures) {
  const std::size_t dim = x.size();
  for (std::size_t q = 0; q < dim; ++q) {
    const double s = chosen == kIdle ? 0.0 : services.at(static_cast<std::size_t>(chosen), q);
    const double dep = std::min(s, x[q]);
    departures[q] = dep;
    x_next[q] = x[q] + a[q] - dep;
  }
}

SimTrace::SimTrace(std::size_t dim, std::size_t horizon)
    : dim_(dim), horizon_(horizon), x_((horizon + 1) * dim, 0.0), a_(horizon * dim, 0.0),
      dep_(horizon * dim, 0.0), chosen_(horizon, kIdle) {}

std::span<const double> SimTrace::x(std::size_t t) const {
  if (t > horizon_) throw std::out_of_range("SimTrace::x slot out of range");
  return {x_.data() + t * dim_, dim_};
}
std::span<const double> SimTrace::arrivals(std::size_t t) const {
  if (t >= horizon_) throw std::out_of_range("SimTrace::arrivals slot out of range");
  return {a_.data() + t * dim_, dim_};
}
std::span<const double> SimTrace::departures(std::size_t t) const {
  if (t >= horizon_) throw std::out_of_range("SimTrace::departures slot out of range");
  return {dep_.data() + t * dim_, dim_};
}
std::span<double> SimTrace::x_mut(std::size_t t) { return {x_.data() + t * dim_, dim_}; }
std::span<double> SimTrace::arrivals_mut(std::size_t t) { return {a_.data() + t * dim_, dim_}; }
std::span<double> SimTrace::departures_mut(std::size_t t) { return {dep_.data() + t * dim_, dim_}; }

double SimTrace::total(std::size_t t) const {
  double s = 0.0;
  for (double v : x(t)) s += v;
  return s;
}

Vec SimTrace::scaled(std::size_t t) const {
  Vec out(dim_, 0.0);
  if (t == 0) return out;
  const auto xt = x(t);
  for (std::size_t q = 0; q < dim_; ++q) out[q] = xt[q] / static_cast<double>(t);
  return out;
}

Vec SimTrace::ratio(std::size_t t) const {
  Vec out(dim_, 0.0);
  const double s = total(t);
  if (!(s > 0.0)) return out;
  const auto xt = x(t);
  for (std::size_t q = 0; q < dim_; ++q) out[q] = xt[q] / s;
  return out;
}

SimTrace run(const SystemSpec& spec, const Policy& policy, const ArrivalModel& arrivals, std::size_t horizon,
             const WorkloadVector& x0, std::uint64_t stream) {
  if (horizon == 0) throw ValidationError("horizon must be at least one slot");
  const std::size_t dim = spec.dim();
  if (arrivals.dim() != dim || x0.dim() != dim) throw ValidationError("run: dimension mismatch");
  arrivals.validate();

  Policy resolved = policy;
  if (resolved.kind == PolicyKind::maxweight && !resolved.d) resolved.d = spec.d;
  Scheduler scheduler(resolved, spec.services);
  ArrivalStream source(arrivals, stream);

  SimTrace trace(dim, horizon);
  std::copy(x0.x.begin(), x0.x.end(), trace.x_mut(0).begin());
  Vec a(dim);
  for (std::size_t t = 0; t < horizon; ++t) {
    source.next(t, a);
    const auto xt = trace.x(t);
    const auto chosen = scheduler.select(xt);
    std::copy(a.begin(), a.end(), trace.arrivals_mut(t).begin());
    trace.set_chosen(t, chosen);
    step(xt, a, spec.services, chosen, trace.x_mut(t + 1), trace.departures_mut(t));
  }
  return trace;
}

bool replay(const SimTrace& trace, const ServiceSet& services) {
  const std::size_t dim = trace.dim();
  Vec next(dim), dep(dim);
  for (std::size_t t = 0; t < trace.horizon(); ++t) {
    step(trace.x(t), trace.arrivals(t), services, trace.chosen(t), next, dep);
    const auto stored = trace.x(t + 1);
    const auto stored_dep = trace.departures(t);
    for (std::size_t q = 0; q < dim; ++q)
      if (std::bit_cast<std::uint64_t>(next[q]) != std::bit_cast<std::uint64_t>(stored[q]) ||
          std::bit_cast<std::uint64_t>(dep[q]) != std::bit_cast<std::uint64_t>(stored_dep[q]))
        return false;
  }
  return true;
}

}  // namespace mwfair::sim
