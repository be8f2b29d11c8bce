#include "mwfair/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mwfair {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ServiceVector::ServiceVector(Vec s) : s_(std::move(s)) {
  require(!s_.empty(), "service vector must have at least one queue");
  require(all_finite(s_), "service vector entries must be finite");
  require(std::all_of(s_.begin(), s_.end(), [](double x) { return x >= 0.0; }),
          "service vector entries must be non-negative");
  require(std::any_of(s_.begin(), s_.end(), [](double x) { return x > 0.0; }),
          "service vector must serve at least one queue");
}

ServiceSet::ServiceSet(std::vector<ServiceVector> vectors) : vectors_(std::move(vectors)) {
  require(!vectors_.empty(), "service set must contain at least one vector");
  dim_ = vectors_.front().dim();
  for (std::size_t m = 0; m < vectors_.size(); ++m) {
    if (vectors_[m].dim() != dim_) {
      std::ostringstream os;
      os << "dimension mismatch: service vector " << m + 1 << " has " << vectors_[m].dim()
         << " entries, expected " << dim_;
      throw ValidationError(os.str());
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (vectors_[m] == vectors_[k]) {
        std::ostringstream os;
        os << "duplicate service vectors " << k + 1 << " and " << m + 1;
        throw ValidationError(os.str());
      }
    }
  }
  const std::size_t n = vectors_.size();
  queue_major_.resize(dim_ * n);
  for (std::size_t q = 0; q < dim_; ++q)
    for (std::size_t m = 0; m < n; ++m) queue_major_[q * n + m] = vectors_[m][q];
}

ServiceSet ServiceSet::from_rows(const std::vector<Vec>& rows) {
  std::vector<ServiceVector> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.emplace_back(r);
  return ServiceSet(std::move(v));
}

double ServiceSet::max_service(std::size_t q) const {
  double best = 0.0;
  for (const auto& s : vectors_) best = std::max(best, s[q]);
  return best;
}

ServiceSet ServiceSet::without(const IndexSet& removed) const {
  std::vector<ServiceVector> kept;
  for (std::size_t m = 0; m < vectors_.size(); ++m)
    if (std::find(removed.begin(), removed.end(), m) == removed.end()) kept.push_back(vectors_[m]);
  return ServiceSet(std::move(kept));
}

ServiceSet ServiceSet::with(const ServiceVector& extra) const {
  auto v = vectors_;
  v.push_back(extra);
  return ServiceSet(std::move(v));
}

LoadVector::LoadVector(Vec rho) : rho_(std::move(rho)) {
  require(!rho_.empty(), "load vector must have at least one queue");
  for (double r : rho_) {
    require(std::isfinite(r), "load entries must be finite");
    require(r > 0.0, "load entries must be strictly positive");
  }
}

WeightMatrix::WeightMatrix(Vec d) : d_(std::move(d)) {
  require(!d_.empty(), "weight matrix must have at least one entry");
  for (double x : d_) {
    require(std::isfinite(x), "weight entries must be finite");
    require(x > 0.0, "weight matrix must be positive definite (every diagonal entry > 0)");
  }
}

WeightMatrix WeightMatrix::identity(std::size_t q) { return WeightMatrix(Vec(q, 1.0)); }

WeightMatrix WeightMatrix::scaled(double c) const {
  require(c > 0.0 && std::isfinite(c), "scale factor must be positive");
  Vec out = d_;
  for (double& x : out) x *= c;
  return WeightMatrix(std::move(out));
}

WeightMatrix WeightMatrix::normalized() const {
  const double lo = *std::min_element(d_.begin(), d_.end());
  return scaled(1.0 / lo);
}

bool WeightMatrix::proportional_to(const WeightMatrix& other, double rel_tol) const {
  if (other.dim() != dim()) return false;
  const auto a = normalized();
  const auto b = other.normalized();
  for (std::size_t q = 0; q < dim(); ++q)
    if (std::abs(a[q] - b[q]) > rel_tol * std::max(a[q], b[q])) return false;
  return true;
}

FairnessTarget::FairnessTarget(Vec theta) : theta_(std::move(theta)) {
  require(!theta_.empty(), "fairness target must have at least one queue");
  double sum = 0.0;
  for (double t : theta_) {
    require(std::isfinite(t) && t >= 0.0, "fairness target entries must be non-negative");
    sum += t;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "fairness target must sum to one");
}

FairnessTarget FairnessTarget::normalize(Vec raw, std::string* warning) {
  double sum = 0.0;
  for (double t : raw) {
    require(std::isfinite(t) && t >= 0.0, "fairness target entries must be non-negative");
    sum += t;
  }
  require(sum > 0.0, "fairness target must have a positive entry");
  if (warning != nullptr) {
    warning->clear();
    if (std::abs(sum - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "fairness target summed to " << sum << "; normalized";
      *warning = os.str();
    }
  }
  for (double& t : raw) t /= sum;
  // Re-sum after division may drift by an ulp or two; absorb into the largest share.
  const double resum = std::accumulate(raw.begin(), raw.end(), 0.0);
  auto big = std::max_element(raw.begin(), raw.end());
  *big += 1.0 - resum;
  return FairnessTarget(std::move(raw));
}

IndexSet FairnessTarget::support() const {
  IndexSet s;
  for (std::size_t q = 0; q < theta_.size(); ++q)
    if (theta_[q] > 0.0) s.push_back(q);
  return s;
}

WorkloadVector::WorkloadVector(Vec values, std::uint64_t slot) : x(std::move(values)), t(slot) {
  for (double v : x) require(std::isfinite(v) && v >= 0.0, "workload entries must be non-negative");
}

MixtureWeights::MixtureWeights(Vec alpha) : alpha_(std::move(alpha)) {
  for (double a : alpha_) require(std::isfinite(a) && a >= 0.0, "mixture weights must be non-negative");
  require(sum() <= 1.0 + 1e-9, "mixture weights must sum to at most one");
}

double MixtureWeights::sum() const noexcept { return std::accumulate(alpha_.begin(), alpha_.end(), 0.0); }

SystemSpec validate_system(ServiceSet services, LoadVector rho, WeightMatrix d) {
  if (services.dim() != rho.dim() || d.dim() != rho.dim()) {
    std::ostringstream os;
    os << "dimension mismatch: services have " << services.dim() << " queues, rho has " << rho.dim()
       << ", D has " << d.dim();
    throw ValidationError(os.str());
  }
  return SystemSpec{std::move(services), std::move(rho), std::move(d)};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot(std::span<const double> a, std::span<const double> w, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * w[i] * b[i];
  return s;
}

Vec positive_part(Vec v) {
  for (double& x : v) x = std::max(x, 0.0);
  return v;
}

Vec residual_load(const Vec& rho, const ServiceSet& services, std::span<const double> alpha) {
  Vec r = rho;
  for (std::size_t m = 0; m < services.size(); ++m) {
    if (alpha[m] == 0.0) continue;
    for (std::size_t q = 0; q < r.size(); ++q) r[q] -= alpha[m] * services.at(m, q);
  }
  return r;
}

Vec normalize_sum(const Vec& v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(s > 0.0)) return {};
  Vec out = v;
  for (double& x : out) x /= s;
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mwfair
