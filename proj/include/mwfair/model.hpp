#pragma once

// Domain types for overloaded parallel-queue systems.
//
// Every type validates its invariants at construction and is immutable
// afterwards, so values can be shared freely between worker threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mwfair {

using Vec = std::vector<double>;
using IndexSet = std::vector<std::size_t>;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Jobs removable per slot from each queue when this configuration is used.
class ServiceVector {
 public:
  explicit ServiceVector(Vec s);

  [[nodiscard]] std::size_t dim() const noexcept { return s_.size(); }
  [[nodiscard]] double operator[](std::size_t q) const { return s_[q]; }
  [[nodiscard]] const Vec& values() const noexcept { return s_; }

  friend bool operator==(const ServiceVector&, const ServiceVector&) = default;

 private:
  Vec s_;
};

/// The ordered set of N service vectors of a common dimension Q.
class ServiceSet {
 public:
  explicit ServiceSet(std::vector<ServiceVector> vectors);
  static ServiceSet from_rows(const std::vector<Vec>& rows);

  [[nodiscard]] std::size_t size() const noexcept { return vectors_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const ServiceVector& operator[](std::size_t m) const { return vectors_[m]; }
  [[nodiscard]] double at(std::size_t m, std::size_t q) const { return vectors_[m][q]; }
  [[nodiscard]] const std::vector<ServiceVector>& vectors() const noexcept { return vectors_; }

  /// Queue-major copy: element (q, m) at q * size() + m.
  [[nodiscard]] const Vec& queue_major() const noexcept { return queue_major_; }

  /// Largest service any configuration gives queue q.
  [[nodiscard]] double max_service(std::size_t q) const;

  [[nodiscard]] ServiceSet without(const IndexSet& removed) const;
  [[nodiscard]] ServiceSet with(const ServiceVector& extra) const;

  friend bool operator==(const ServiceSet& a, const ServiceSet& b) { return a.vectors_ == b.vectors_; }

 private:
  std::vector<ServiceVector> vectors_;
  std::size_t dim_ = 0;
  Vec queue_major_;
};

/// Long-run arrival rates, each strictly positive and finite.
class LoadVector {
 public:
  explicit LoadVector(Vec rho);

  [[nodiscard]] std::size_t dim() const noexcept { return rho_.size(); }
  [[nodiscard]] double operator[](std::size_t q) const { return rho_[q]; }
  [[nodiscard]] const Vec& values() const noexcept { return rho_; }

  friend bool operator==(const LoadVector&, const LoadVector&) = default;

 private:
  Vec rho_;
};

/// Diagonal of the MaxWeight matrix D; unique only up to a positive scalar.
class WeightMatrix {
 public:
  explicit WeightMatrix(Vec d);
  static WeightMatrix identity(std::size_t q);

  [[nodiscard]] std::size_t dim() const noexcept { return d_.size(); }
  [[nodiscard]] double operator[](std::size_t q) const { return d_[q]; }
  [[nodiscard]] const Vec& diagonal() const noexcept { return d_; }

  [[nodiscard]] WeightMatrix scaled(double c) const;
  /// Divided by its smallest entry, e.g. diag(3/2, 3) -> diag(1, 2).
  [[nodiscard]] WeightMatrix normalized() const;
  /// True when the two matrices agree up to a positive scalar within rel_tol.
  [[nodiscard]] bool proportional_to(const WeightMatrix& other, double rel_tol = 1e-9) const;

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  Vec d_;
};

/// Target proportions of aggregate backlog per queue.
class FairnessTarget {
 public:
  /// Requires entries >= 0 summing to 1 within 1e-12.
  explicit FairnessTarget(Vec theta);
  /// Divides by the sum. Sets *warning when the input sum was off by more than 1e-9.
  static FairnessTarget normalize(Vec raw, std::string* warning = nullptr);

  [[nodiscard]] std::size_t dim() const noexcept { return theta_.size(); }
  [[nodiscard]] double operator[](std::size_t q) const { return theta_[q]; }
  [[nodiscard]] const Vec& values() const noexcept { return theta_; }
  /// Queues with a strictly positive share.
  [[nodiscard]] IndexSet support() const;

 private:
  Vec theta_;
};

struct WorkloadVector {
  Vec x;
  std::uint64_t t = 0;

  WorkloadVector() = default;
  explicit WorkloadVector(Vec values, std::uint64_t slot = 0);
  [[nodiscard]] std::size_t dim() const noexcept { return x.size(); }
};

/// Mixture weights over the service vectors; sum may be below one for sub-convex mixtures.
class MixtureWeights {
 public:
  MixtureWeights() = default;
  explicit MixtureWeights(Vec alpha);

  [[nodiscard]] std::size_t size() const noexcept { return alpha_.size(); }
  [[nodiscard]] double operator[](std::size_t m) const { return alpha_[m]; }
  [[nodiscard]] const Vec& values() const noexcept { return alpha_; }
  [[nodiscard]] double sum() const noexcept;

 private:
  Vec alpha_;
};

struct SystemSpec {
  ServiceSet services;
  LoadVector rho;
  WeightMatrix d;

  [[nodiscard]] std::size_t dim() const noexcept { return rho.dim(); }
};

SystemSpec validate_system(ServiceSet services, LoadVector rho, WeightMatrix d);

// Small dense helpers shared by the numeric modules.
[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double weighted_dot(std::span<const double> a, std::span<const double> w, std::span<const double> b);
[[nodiscard]] Vec positive_part(Vec v);
/// rho - sum_m alpha_m S_m, without truncation.
[[nodiscard]] Vec residual_load(const Vec& rho, const ServiceSet& services, std::span<const double> alpha);
/// v / sum(v); returns an empty vector when the sum is not positive.
[[nodiscard]] Vec normalize_sum(const Vec& v);
[[nodiscard]] double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace mwfair
