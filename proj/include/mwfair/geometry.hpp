#pragma once

// Stability-region membership, MaxWeight cones and boundary vectors
// between cones.

#include <optional>

#include "mwfair/model.hpp"

namespace mwfair::geometry {

/// Relative tolerance for "equal inner products".
inline constexpr double kEqTol = 1e-9;
/// Subset enumeration is exhaustive and refuses beyond this many vectors.
inline constexpr std::size_t kMaxEnumeration = 16;

struct BoundaryVector {
  Vec v;            // v >= 0, max_q v_q == 1
  IndexSet subset;  // service vectors tied on v, strictly above all others
};

struct ConeAssignment {
  IndexSet maximizers;
};

/// max over the simplex of min_q (sum_m alpha_m S_m - rho)_q. Non-negative iff rho is stabilizable.
/// rho may contain zeros here (used for mode-switch rates).
[[nodiscard]] double stability_margin(const Vec& rho, const ServiceSet& services);

[[nodiscard]] bool is_stabilizable(const Vec& rho, const ServiceSet& services);
[[nodiscard]] bool is_stabilizable(const LoadVector& rho, const ServiceSet& services);

/// Indices j whose S_j is dominated by a convex combination of the other vectors.
[[nodiscard]] IndexSet non_essential(const ServiceSet& services);

/// <S_m, D x> for every service vector, through the dispatched SIMD kernel.
[[nodiscard]] Vec maxweight_scores(std::span<const double> x, const WeightMatrix& d, const ServiceSet& services);

/// First index attaining the maximum within kEqTol relative; scores must be non-empty.
[[nodiscard]] IndexSet near_maximizers(std::span<const double> scores);

[[nodiscard]] ConeAssignment cone_of(const WorkloadVector& x, const WeightMatrix& d, const ServiceSet& services);

/// A v >= 0 with <v,S_i> equal on `subset` and strictly larger than <v,S_m> off it, or none.
/// With `support` given, v_q must be positive exactly on those queues and zero elsewhere.
/// Among admissible v the one maximizing min_q v_q (over the support) is returned.
[[nodiscard]] std::optional<BoundaryVector> boundary_vector(const IndexSet& subset, const ServiceSet& services,
                                                            const std::optional<IndexSet>& support = std::nullopt);

/// Every subset of size >= 2 admitting a boundary vector, in lexicographic order of bitmask.
[[nodiscard]] std::vector<BoundaryVector> relevant_boundaries(const ServiceSet& services);
[[nodiscard]] std::vector<BoundaryVector> relevant_boundaries(const ServiceSet& services, const IndexSet& support);

/// Checks the tie/strict-dominance system for a candidate boundary.
[[nodiscard]] bool satisfies_boundary(const BoundaryVector& b, const ServiceSet& services, double tol = kEqTol);

}  // namespace mwfair::geometry
