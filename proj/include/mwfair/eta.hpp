#pragma once

// The backlog growth ray of an overloaded MaxWeight system.
//
// For load rho outside the stability region, X(t)/t converges to the unique
// minimizer eta of <e, D e> over e = (rho - sum_m alpha_m S_m)^+ with
// alpha >= 0, sum alpha <= 1. Equivalently eta is the unique fixed point
//   eta = (rho - sum alpha_m S_m)^+,  sum alpha = 1,
//   alpha_m > 0  =>  <eta, D S_m> = max_k <eta, D S_k>.

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "mwfair/model.hpp"

namespace mwfair::eta {

/// Fixed-point residual tolerance.
inline constexpr double kFixTol = 1e-8;

struct EtaOptions {
  double tol = kFixTol;
  std::size_t max_iter = 100'000;
  /// Starting mixture for projected gradient; projected onto {alpha >= 0, sum <= 1}.
  std::optional<Vec> initial_alpha;
  /// Try the active-set finish every this many gradient iterations.
  std::size_t polish_every = 10;
};

struct EtaSolution {
  Vec eta;
  MixtureWeights alpha;
  double objective = 0.0;     // <eta, D eta>
  double kkt_residual = 0.0;  // largest fixed-point residual
  std::size_t iterations = 0;
  bool stable = false;        // rho inside the stability region: eta = 0
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, EtaSolution best) : std::runtime_error(what), best_(std::move(best)) {}
  [[nodiscard]] const EtaSolution& best() const noexcept { return best_; }

 private:
  EtaSolution best_;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// f(alpha) = <(rho - A alpha)^+, D (rho - A alpha)^+>.
[[nodiscard]] double objective(const Vec& rho, const ServiceSet& services, const WeightMatrix& d,
                               std::span<const double> alpha);

/// Projected-gradient solve. Throws NonConvergence after max_iter.
[[nodiscard]] EtaSolution solve_eta(const LoadVector& rho, const ServiceSet& services, const WeightMatrix& d,
                                    const EtaOptions& options = {});

struct FixedPointReport {
  bool ok = false;
  bool simplex_waived = false;     // stable candidate: sum alpha <= 1 accepted
  double shape_residual = 0.0;     // |eta - (rho - A alpha)^+|
  double simplex_residual = 0.0;   // |sum alpha - 1|, negative alpha
  double cone_residual = 0.0;      // score deficit of used vectors
  double identity_residual = 0.0;  // <eta,D eta> - <rho,D eta> + max_S <S,D eta>

  [[nodiscard]] double max_residual() const noexcept;
};

[[nodiscard]] FixedPointReport verify_fixed_point(std::span<const double> eta, std::span<const double> alpha,
                                                  const LoadVector& rho, const ServiceSet& services,
                                                  const WeightMatrix& d, double tol = kFixTol);
[[nodiscard]] FixedPointReport verify_fixed_point(const EtaSolution& candidate, const LoadVector& rho,
                                                  const ServiceSet& services, const WeightMatrix& d,
                                                  double tol = kFixTol);

/// Relative scale used by the identity check.
[[nodiscard]] double identity_scale(std::span<const double> eta, const LoadVector& rho, const WeightMatrix& d);

struct OracleResult {
  Vec eta;
  Vec alpha;
  double objective = 0.0;
  std::uint64_t points = 0;
};

inline constexpr std::uint64_t kDefaultOracleBudget = 2'000'000'000ULL;

/// Number of lattice points of step 1/resolution in {alpha >= 0, sum alpha <= 1} in N dims.
[[nodiscard]] std::uint64_t oracle_grid_size(std::size_t n, std::size_t resolution);

/// Exhaustive lattice search of f over the sub-simplex. Throws BudgetExceeded when the
/// lattice is larger than `budget` points.
[[nodiscard]] OracleResult eta_oracle(const LoadVector& rho, const ServiceSet& services, const WeightMatrix& d,
                                      std::size_t resolution, std::uint64_t budget = kDefaultOracleBudget);

/// Growth ray minimizing the largest component (max-min fairness). Ties are broken
/// toward the smallest total growth; the returned ray is (rho - A alpha)^+.
[[nodiscard]] Vec maxmin_eta(const LoadVector& rho, const ServiceSet& services);

struct ProportionalResult {
  Vec eta;   // k * rho
  double k;  // smallest K with (1 - K) rho stabilizable
};

/// Requires rho outside the stability region (std::domain_error otherwise).
[[nodiscard]] ProportionalResult proportional_eta(const LoadVector& rho, const ServiceSet& services,
                                                  double tol = 1e-13);

}  // namespace mwfair::eta
