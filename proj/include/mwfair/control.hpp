#pragma once

// Fairness control: choosing the diagonal MaxWeight matrix D so that the
// backlog grows along a target direction theta.
//
// A target is reachable through a relevant boundary (subset B with boundary
// vector v, v_q > 0 exactly where theta_q > 0) when
//   rho = c * theta + sum_{m in B} alpha_m S_m,  c > 0,  alpha in the open simplex of B
// on the queues with theta_q > 0, and the remaining queues are saturated.
// D_qq = v_q / theta_q then places the cone boundary of B on theta.

#include <optional>
#include <string>
#include <string_view>

#include "mwfair/geometry.hpp"
#include "mwfair/model.hpp"

namespace mwfair::control {

enum class Verdict { feasible, infeasible_no_boundary, infeasible_direction, stable };

[[nodiscard]] std::string_view verdict_name(Verdict v) noexcept;

struct FeasibilityReport {
  Verdict verdict = Verdict::infeasible_direction;
  std::optional<IndexSet> subset;
  std::optional<geometry::BoundaryVector> v;
  std::optional<MixtureWeights> alpha;
  std::optional<Vec> eta;
  std::optional<WeightMatrix> d;
  bool verified = false;  // fixed point re-checked under the synthesized D
  std::string reason;
};

/// D_qq = v_q / target_q where v_q > 0, else 1. Throws ValidationError when
/// v_q == 0 and target_q == 0 do not coincide.
[[nodiscard]] WeightMatrix synthesize_d(std::span<const double> target, std::span<const double> v);

/// Solution of the direction-matching LP for one subset of service vectors.
struct DirectionFit {
  bool closed = false;  // realizable with alpha on the closed simplex of the subset
  bool open = false;    // realizable with every subset member strictly used
  double margin = 0.0;  // max over realizations of min_m alpha_m
  Vec alpha;            // full length N, zero off the subset
  double c = 0.0;       // growth rate along theta
};

[[nodiscard]] DirectionFit fit_direction(const FairnessTarget& theta, const Vec& rho, const ServiceSet& services,
                                         const IndexSet& members);

[[nodiscard]] FeasibilityReport check_feasibility(const FairnessTarget& theta, const LoadVector& rho,
                                                  const ServiceSet& services);

struct DirectionPiece {
  IndexSet subset;
  Vec v;                        // empty for a single service vector
  std::vector<Vec> generators;  // hull vertices of the reachable directions
};

struct DirectionSet {
  bool stable = false;
  std::vector<DirectionPiece> pieces;
};

/// Full-support directions reachable through each relevant boundary (Q <= 3).
[[nodiscard]] DirectionSet feasible_directions(const LoadVector& rho, const ServiceSet& services);

struct Cell {
  IndexSet subset;
  Vec v;
  WeightMatrix d;
  std::vector<Vec> vertices;  // the S_m spanning the cell's base
  Vec ray;                    // theta
};

struct OverloadPartition {
  FairnessTarget theta;
  ServiceSet services;
  std::vector<Cell> cells;
};

[[nodiscard]] OverloadPartition partition_overload(const FairnessTarget& theta, const ServiceSet& services);

/// Index of the unique cell containing rho; std::logic_error if several match.
[[nodiscard]] std::optional<std::size_t> locate_cell(const LoadVector& rho, const OverloadPartition& partition);

[[nodiscard]] std::optional<WeightMatrix> classify_rho(const LoadVector& rho, const OverloadPartition& partition);

}  // namespace mwfair::control
