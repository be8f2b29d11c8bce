#pragma once

// Discrete-time simulation of X(t+1) = X(t) + A(t) - min(S(t), X(t)).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mwfair/model.hpp"

namespace mwfair::sim {

/// xoshiro256** seeded through SplitMix64. Stream s of seed k starts from
/// SplitMix64 state k ^ (0xD1B54A32D192ED03 * (s + 1)). uniform01() uses the
/// top 53 bits: (next() >> 11) * 2^-53.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
  std::uint64_t next() noexcept;
  double uniform01() noexcept;
  /// Integer in [0, n] inclusive, by rejection then modulo.
  std::uint64_t below_inclusive(std::uint64_t n) noexcept;

 private:
  std::uint64_t s_[4];
};

enum class ArrivalKind { uniform, deterministic, trace, mode_switch };

struct ArrivalModel {
  ArrivalKind kind = ArrivalKind::uniform;
  Vec rate;                 // uniform and deterministic
  Vec stable_rate;          // mode_switch
  Vec unstable_rate;        // mode_switch
  std::size_t period = 500; // slots per mode
  bool stable_first = true;
  std::vector<Vec> trace;   // one row per slot
  bool integer = false;     // uniform draws on {0, ..., round(2 rho_q)}
  std::uint64_t seed = 1;

  static ArrivalModel uniform(Vec rate, std::uint64_t seed, bool integer = false);
  static ArrivalModel deterministic(Vec rate);
  static ArrivalModel from_trace(std::vector<Vec> rows);
  static ArrivalModel mode_switch(Vec stable, Vec unstable, std::size_t period, std::uint64_t seed,
                                  bool stable_first = true);

  [[nodiscard]] std::size_t dim() const;
  /// Mean arrival vector in force at slot t.
  [[nodiscard]] const Vec& rate_at(std::size_t t) const;
  /// True when slot t belongs to a stable window (mode_switch only).
  [[nodiscard]] bool stable_at(std::size_t t) const;
  /// Per-queue upper bound on a single slot's arrivals.
  [[nodiscard]] Vec bound_at(std::size_t t) const;
  void validate() const;
};

/// Reads `t,a_1,...,a_Q` CSV. Throws ValidationError on malformed input.
[[nodiscard]] std::vector<Vec> load_trace(const std::filesystem::path& path);

class ArrivalStream {
 public:
  ArrivalStream(const ArrivalModel& model, std::uint64_t stream = 0);
  /// Arrivals for slot t; slots must be requested in order.
  void next(std::size_t t, Vec& out);

 private:
  const ArrivalModel* model_;
  Rng rng_;
};

enum class PolicyKind { maxweight, stationary_mixture, fixed };

struct Policy {
  PolicyKind kind = PolicyKind::maxweight;
  std::optional<WeightMatrix> d;
  Vec beta;  // sum <= 1, remainder idles
  std::uint64_t seed = 0;
  std::size_t index = 0;

  static Policy maxweight(WeightMatrix d);
  static Policy stationary_mixture(Vec beta, std::uint64_t seed);
  static Policy fixed(std::size_t index);
};

/// Lowest index among the near-maximizers of <S_m, D x>.
[[nodiscard]] std::size_t maxweight_select(std::span<const double> x, const WeightMatrix& d,
                                           const ServiceSet& services);

inline constexpr std::int64_t kIdle = -1;

class Scheduler {
 public:
  Scheduler(const Policy& policy, const ServiceSet& services);
  /// Chosen service index for workload x, or kIdle.
  std::int64_t select(std::span<const double> x);

 private:
  const Policy* policy_;
  const ServiceSet* services_;
  Rng rng_;
  Vec weights_, scores_;
};

/// One slot of the recursion. departures_q = min(S_q, x_q); idle serves nothing.
void step(std::span<const double> x, std::span<const double> a, const ServiceSet& services, std::int64_t chosen,
          std::span<double> x_next, std::span<double> departures);

class SimTrace {
 public:
  SimTrace(std::size_t dim, std::size_t horizon);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::span<const double> x(std::size_t t) const;  // t in [0, horizon]
  [[nodiscard]] std::span<const double> arrivals(std::size_t t) const;
  [[nodiscard]] std::span<const double> departures(std::size_t t) const;
  [[nodiscard]] std::int64_t chosen(std::size_t t) const { return chosen_.at(t); }
  [[nodiscard]] double total(std::size_t t) const;
  /// X(t)/t; zero at t = 0.
  [[nodiscard]] Vec scaled(std::size_t t) const;
  /// X(t) / sum_k X_k(t); zero vector when the system is empty.
  [[nodiscard]] Vec ratio(std::size_t t) const;

  std::span<double> x_mut(std::size_t t);
  std::span<double> arrivals_mut(std::size_t t);
  std::span<double> departures_mut(std::size_t t);
  void set_chosen(std::size_t t, std::int64_t m) { chosen_.at(t) = m; }

 private:
  std::size_t dim_, horizon_;
  std::vector<double> x_, a_, dep_;
  std::vector<std::int64_t> chosen_;
};

[[nodiscard]] SimTrace run(const SystemSpec& spec, const Policy& policy, const ArrivalModel& arrivals,
                           std::size_t horizon, const WorkloadVector& x0, std::uint64_t stream = 0);

/// Re-applies step() to every stored slot; true iff each X(t+1) matches bit for bit.
[[nodiscard]] bool replay(const SimTrace& trace, const ServiceSet& services);

inline constexpr double kStableScaledBacklog = 0.02;

struct DirectionEstimate {
  Vec eta_hat;                   // tail average of X(t)/t
  std::optional<Vec> theta_hat;  // tail average of X(t)/sum X(t); empty for stable runs
  bool stable = false;
};

[[nodiscard]] DirectionEstimate measure_direction(const SimTrace& trace, double tail_fraction = 0.2);

struct WindowEstimate {
  std::size_t begin = 0, end = 0;
  Vec growth;                    // (X(end) - X(begin)) / (end - begin)
  std::optional<Vec> theta_hat;  // average ratio over the last tail_fraction of the window
  double min_total = 0.0;
  double end_total = 0.0;
};

/// Slots [begin, end] of the trace, with end <= horizon.
[[nodiscard]] WindowEstimate measure_window(const SimTrace& trace, std::size_t begin, std::size_t end,
                                            double tail_fraction);

struct MinimalityEntry {
  Vec beta;
  Vec analytic_direction;  // normalize((rho - sum beta_m S_m)^+)
  bool qualifies = false;
  Vec eta_hat;
  double kappa = 0.0;
};

struct MinimalityReport {
  Vec eta_maxweight;
  std::vector<MinimalityEntry> entries;
  std::size_t qualifying = 0;
  double min_kappa = 0.0;
  bool ok = false;  // at least one qualifying alternative and all kappa >= 1 - 0.03
};

inline constexpr double kDirectionFilter = 2e-2;
inline constexpr double kKappaSlack = 0.03;

[[nodiscard]] MinimalityReport compare_minimality(const SystemSpec& spec, const FairnessTarget& theta,
                                                  const WeightMatrix& d_star, const std::vector<Vec>& alternatives,
                                                  std::size_t horizon, std::uint64_t seed);

}  // namespace mwfair::sim
